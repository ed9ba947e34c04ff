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

#include "clasp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace clasp {

Mat matmul(const Mat &a, const Mat &b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: dimension mismatch, a is " + std::to_string(a.rows) +
                                    "x" + std::to_string(a.cols) + " but b is " +
                                    std::to_string(b.rows) + "x" + std::to_string(b.cols));
    }
    Mat out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const float *arow = a.row(i);
        float *orow = out.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const float aik = arow[k];
            const float *brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

void matmul_accum(const Mat &a, const Mat &b, Mat &out) {
    if (a.cols != b.rows || out.rows != a.rows || out.cols != b.cols) {
        throw std::invalid_argument("matmul_accum: dimension mismatch");
    }
    for (int i = 0; i < a.rows; ++i) {
        const float *arow = a.row(i);
        float *orow = out.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const float aik = arow[k];
            const float *brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
}

void matvec_accum(std::span<const float> x, const Mat &w, std::span<float> y) {
    if (int(x.size()) != w.rows || int(y.size()) != w.cols) {
        throw std::invalid_argument("matvec: dimension mismatch");
    }
    for (int i = 0; i < w.rows; ++i) {
        const float xi = x[i];
        const float *wrow = w.row(i);
        for (int j = 0; j < w.cols; ++j) {
            y[j] += xi * wrow[j];
        }
    }
}

Vec matvec(std::span<const float> x, const Mat &w) {
    Vec y(w.cols, 0.0f);
    matvec_accum(x, w, y);
    return y;
}

Vec rms_norm(std::span<const float> x, std::span<const float> gain, float epsilon) {
    if (x.size() != gain.size()) {
        throw std::invalid_argument("rms_norm: length mismatch");
    }
    if (!(epsilon > 0.0f)) {
        throw std::invalid_argument("rms_norm: epsilon must be positive");
    }
    double sumsq = 0.0;
    for (float v : x) {
        sumsq += double(v) * v;
    }
    const float scale = float(1.0 / std::sqrt(sumsq / double(x.size()) + double(epsilon)));
    Vec out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] * scale * gain[i];
    }
    return out;
}

double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        s += double(a[i]) * b[i];
    }
    return s;
}

double l2_norm(std::span<const float> x) {
    return std::sqrt(dot(x, x));
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("cosine_similarity: length mismatch");
    }
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw std::domain_error("cosine_similarity: zero-norm input");
    }
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

ProbDist softmax(std::span<const float> logits, float temperature) {
    if (logits.empty()) {
        throw std::invalid_argument("softmax: empty logits");
    }
    if (!(temperature > 0.0f)) {
        throw std::invalid_argument("softmax: temperature must be positive");
    }
    float max_logit = logits[0];
    for (float v : logits) {
        max_logit = std::max(max_logit, v);
    }
    ProbDist probs(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        const double e = std::exp(double(logits[i] - max_logit) / double(temperature));
        probs[i] = float(e);
        sum += e;
    }
    const float inv = float(1.0 / sum);
    for (float &p : probs) {
        p *= inv;
    }
    return probs;
}

int argmax(std::span<const float> x) {
    if (x.empty()) {
        throw std::invalid_argument("argmax: empty input");
    }
    int best = 0;
    for (int i = 1; i < int(x.size()); ++i) {
        if (x[i] > x[best]) {
            best = i;
        }
    }
    return best;
}

SampleResult softmax_sample(std::span<const float> logits, float temperature, Rng &rng) {
    if (logits.empty()) {
        throw std::invalid_argument("softmax_sample: empty logits");
    }
    if (temperature < 0.0f) {
        throw std::invalid_argument("softmax_sample: negative temperature");
    }
    SampleResult res;
    if (temperature == 0.0f) {
        res.token = argmax(logits);
        res.dist.assign(logits.size(), 0.0f);
        res.dist[res.token] = 1.0f;
        return res;
    }
    res.dist = softmax(logits, temperature);
    res.token = sample_from_dist(res.dist, rng);
    return res;
}

int sample_from_dist(const ProbDist &dist, Rng &rng) {
    if (dist.empty()) {
        throw std::invalid_argument("sample_from_dist: empty distribution");
    }
    const double r = rng.uniform();
    double cum = 0.0;
    for (size_t i = 0; i < dist.size(); ++i) {
        cum += dist[i];
        if (r < cum) {
            return int(i);
        }
    }
    // r landed in the rounding slack past the last positive entry
    for (size_t i = dist.size(); i-- > 0;) {
        if (dist[i] > 0.0f) {
            return int(i);
        }
    }
    return int(dist.size()) - 1;
}

bool all_finite(std::span<const float> x) {
    for (float v : x) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

} // namespace clasp
