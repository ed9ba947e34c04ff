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

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "clasp/numerics.hpp"
#include "clasp/rng.hpp"

using namespace clasp;

TEST_SUITE_BEGIN("numerics");

TEST_CASE("matmul small case") {
    Mat a(2, 3);
    Mat b(3, 2);
    float av[] = {1, 2, 3, 4, 5, 6};
    float bv[] = {7, 8, 9, 10, 11, 12};
    std::copy(std::begin(av), std::end(av), a.data.begin());
    std::copy(std::begin(bv), std::end(bv), b.data.begin());
    Mat c = matmul(a, b);
    CHECK(c.rows == 2);
    CHECK(c.cols == 2);
    CHECK(c.at(0, 0) == doctest::Approx(58));
    CHECK(c.at(0, 1) == doctest::Approx(64));
    CHECK(c.at(1, 0) == doctest::Approx(139));
    CHECK(c.at(1, 1) == doctest::Approx(154));
}

TEST_CASE("matmul rejects shape mismatch") {
    Mat a(2, 3);
    Mat b(2, 2);
    CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
}

TEST_CASE("matvec matches matmul row") {
    Rng rng(7);
    Mat w(5, 4);
    for (float &v : w.data) {
        v = float(rng.normal());
    }
    Vec x(5);
    for (float &v : x) {
        v = float(rng.normal());
    }
    Vec y = matvec(x, w);
    Mat xm(1, 5);
    std::copy(x.begin(), x.end(), xm.data.begin());
    Mat ym = matmul(xm, w);
    for (int j = 0; j < 4; ++j) {
        CHECK(y[j] == ym.at(0, j));
    }
}

TEST_CASE("rms_norm hand case") {
    Vec x{3.0f, 4.0f};
    Vec gain{1.0f, 2.0f};
    Vec y = rms_norm(x, gain);
    const double scale = 1.0 / std::sqrt((9.0 + 16.0) / 2.0 + 1e-5);
    CHECK(y[0] == doctest::Approx(3.0 * scale));
    CHECK(y[1] == doctest::Approx(4.0 * scale * 2.0));
}

TEST_CASE("rms_norm of zeros stays finite") {
    Vec x(8, 0.0f);
    Vec gain(8, 1.0f);
    Vec y = rms_norm(x, gain);
    CHECK(all_finite(y));
    for (float v : y) {
        CHECK(v == 0.0f);
    }
}

TEST_CASE("softmax sums to one and is shift stable") {
    Vec logits{1000.0f, 1001.0f, 999.0f};
    ProbDist p = softmax(logits);
    double sum = 0;
    for (float v : p) {
        sum += v;
    }
    CHECK(sum == doctest::Approx(1.0));
    CHECK(all_finite(p));

    Vec shifted{0.0f, 1.0f, -1.0f};
    ProbDist q = softmax(shifted);
    for (size_t i = 0; i < p.size(); ++i) {
        CHECK(p[i] == doctest::Approx(q[i]));
    }
}

TEST_CASE("softmax temperature flattens") {
    Vec logits{2.0f, 0.0f};
    ProbDist sharp = softmax(logits, 0.5f);
    ProbDist flat = softmax(logits, 4.0f);
    CHECK(sharp[0] > flat[0]);
    CHECK(flat[0] > 0.5f);
}

TEST_CASE("argmax takes lowest index on ties") {
    Vec logits{1.0f, 3.0f, 3.0f, 2.0f};
    CHECK(argmax(logits) == 1);
}

TEST_CASE("cosine similarity") {
    Vec a{1.0f, 0.0f};
    Vec b{0.0f, 1.0f};
    Vec c{1.0f, 1.0f};
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
    CHECK(cosine_similarity(c, a) == doctest::Approx(0.70710678));
    Vec neg{-1.0f, 0.0f};
    CHECK(cosine_similarity(a, neg) == doctest::Approx(-1.0));

    Vec scaled{5.0f, 5.0f};
    CHECK(cosine_similarity(scaled, a) == doctest::Approx(cosine_similarity(c, a)));
    CHECK(cosine_similarity(a, c) == doctest::Approx(cosine_similarity(c, a)));

    Vec zero{0.0f, 0.0f};
    CHECK_THROWS_AS(cosine_similarity(a, zero), std::domain_error);
}

TEST_CASE("softmax_sample greedy picks argmax with one-hot dist") {
    Rng rng(1);
    Vec logits{5.0f, 1.0f, 1.0f};
    SampleResult r = softmax_sample(logits, 0.0f, rng);
    CHECK(r.token == 0);
    CHECK(r.dist[0] == 1.0f);
    CHECK(r.dist[1] == 0.0f);
    // greedy consumes no draws: stream must be untouched
    Rng fresh(1);
    CHECK(rng.next_u64() == fresh.next_u64());
}

TEST_CASE("softmax_sample rejects negative temperature") {
    Rng rng(1);
    Vec logits{0.0f, 0.0f};
    CHECK_THROWS_AS(softmax_sample(logits, -1.0f, rng), std::invalid_argument);
}

TEST_CASE("softmax_sample hand distributions") {
    Rng rng(2);
    Vec even{0.0f, 0.0f};
    SampleResult r = softmax_sample(even, 1.0f, rng);
    CHECK(r.dist[0] == doctest::Approx(0.5));
    CHECK(r.dist[1] == doctest::Approx(0.5));

    Vec skew{float(std::log(2.0)), 0.0f};
    SampleResult s = softmax_sample(skew, 1.0f, rng);
    CHECK(s.dist[0] == doctest::Approx(2.0 / 3.0));
    CHECK(s.dist[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("softmax_sample empirical frequencies track the distribution") {
    Rng rng(42);
    Vec logits{1.0f, 0.0f, -1.0f, 0.5f};
    ProbDist expect = softmax(logits);
    const int n = 20000;
    std::vector<int> counts(4, 0);
    for (int i = 0; i < n; ++i) {
        counts[size_t(softmax_sample(logits, 1.0f, rng).token)] += 1;
    }
    for (int i = 0; i < 4; ++i) {
        CHECK(double(counts[i]) / n == doctest::Approx(expect[i]).epsilon(0.05));
    }
}

TEST_CASE("sample_from_dist respects point mass") {
    Rng rng(3);
    ProbDist d{0.0f, 1.0f, 0.0f};
    for (int i = 0; i < 10; ++i) {
        CHECK(sample_from_dist(d, rng) == 1);
    }
}

TEST_CASE("rng determinism and split independence") {
    Rng a(99);
    Rng b(99);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    Rng c(99);
    Rng child = c.split();
    CHECK(child.next_u64() != c.next_u64());
}

TEST_CASE("rng uniform range and moments") {
    Rng rng(17);
    double sum = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("rng uniform_int stays in range") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        CHECK(rng.uniform_int(7) < 7);
    }
}

TEST_CASE("rng normal has sane moments") {
    Rng rng(23);
    double sum = 0;
    double sumsq = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.05));
    CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("all_finite flags bad values") {
    Vec good{1.0f, -2.0f, 0.0f};
    CHECK(all_finite(good));
    Vec bad{1.0f, std::numeric_limits<float>::infinity()};
    CHECK_FALSE(all_finite(bad));
    Vec nan_vec{std::nanf("")};
    CHECK_FALSE(all_finite(nan_vec));
}

TEST_SUITE_END();
