// Copyright 2026 clasp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Chi-square goodness-of-fit helpers for the sampling tests. The p-value
// comes from the regularized upper incomplete gamma function Q(k/2, x/2),
// evaluated by series or continued fraction.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stats {

inline double log_gamma(double x) { return std::lgamma(x); }

// Regularized lower incomplete gamma P(a, x) by power series; valid for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-15) {
            break;
        }
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by continued fraction; valid for x >= a + 1.
inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double f = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-15) {
            break;
        }
    }
    return f * std::exp(-x + a * std::log(x) - log_gamma(a));
}

inline double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) {
        throw std::domain_error("gamma_q requires a > 0 and x >= 0");
    }
    if (x == 0.0) {
        return 1.0;
    }
    if (x < a + 1.0) {
        return 1.0 - gamma_p_series(a, x);
    }
    return gamma_q_cf(a, x);
}

// Survival function of the chi-square distribution with `dof` degrees of freedom.
inline double chi_square_pvalue(double statistic, int dof) {
    if (dof < 1) {
        throw std::domain_error("chi_square_pvalue requires dof >= 1");
    }
    return gamma_q(double(dof) / 2.0, statistic / 2.0);
}

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double pvalue = 1.0;
    int pooled_buckets = 0;
};

// Goodness-of-fit test with standard pooling: adjacent buckets are merged
// until every pooled bucket has expected count >= min_expected. A trailing
// underweight pool is merged back into the previous one.
inline ChiSquareResult chi_square_test(const std::vector<double> &observed,
                                       const std::vector<double> &expected,
                                       double min_expected = 5.0) {
    if (observed.size() != expected.size() || observed.empty()) {
        throw std::invalid_argument("chi_square_test requires matching nonempty inputs");
    }
    std::vector<double> obs_pool;
    std::vector<double> exp_pool;
    double o_acc = 0.0;
    double e_acc = 0.0;
    for (size_t i = 0; i < observed.size(); ++i) {
        o_acc += observed[i];
        e_acc += expected[i];
        if (e_acc >= min_expected) {
            obs_pool.push_back(o_acc);
            exp_pool.push_back(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if (e_acc > 0.0 || o_acc > 0.0) {
        if (exp_pool.empty()) {
            obs_pool.push_back(o_acc);
            exp_pool.push_back(e_acc);
        } else {
            obs_pool.back() += o_acc;
            exp_pool.back() += e_acc;
        }
    }
    if (exp_pool.size() < 2) {
        throw std::invalid_argument("chi_square_test needs at least two pooled buckets");
    }
    ChiSquareResult r;
    r.pooled_buckets = int(exp_pool.size());
    for (size_t i = 0; i < exp_pool.size(); ++i) {
        const double diff = obs_pool[i] - exp_pool[i];
        r.statistic += diff * diff / exp_pool[i];
    }
    r.dof = int(exp_pool.size()) - 1;
    r.pvalue = chi_square_pvalue(r.statistic, r.dof);
    return r;
}

} // namespace stats
