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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "clasp/rng.hpp"

namespace clasp {

// Activations and weights are plain f32 throughout.
using Vec = std::vector<float>;

struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<float> data; // row-major, rows * cols

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), data(size_t(r) * c, 0.0f) {}

    float *row(int r) { return data.data() + size_t(r) * cols; }
    const float *row(int r) const { return data.data() + size_t(r) * cols; }
    float &at(int r, int c) { return data[size_t(r) * cols + c]; }
    float at(int r, int c) const { return data[size_t(r) * cols + c]; }
};

// Probabilities over the vocabulary, indexed by token id. Entries are
// non-negative and sum to 1 within 1e-6.
using ProbDist = std::vector<float>;

Mat matmul(const Mat &a, const Mat &b);

// out += a * b. Additions per output element run in ascending k, matching
// matvec_accum, so a residual seeded into out rounds identically to the
// vector path.
void matmul_accum(const Mat &a, const Mat &b, Mat &out);

// y[j] += sum_i x[i] * w[i, j]; w is in_dim x out_dim row-major. The row-major
// accumulation keeps the inner loop vertical so it vectorizes without
// reordering any reduction.
void matvec_accum(std::span<const float> x, const Mat &w, std::span<float> y);
Vec matvec(std::span<const float> x, const Mat &w);

Vec rms_norm(std::span<const float> x, std::span<const float> gain, float epsilon = 1e-5f);

double dot(std::span<const float> a, std::span<const float> b);
double l2_norm(std::span<const float> x);

// dot(a, b) / (|a| |b|). Throws std::domain_error when either norm is zero.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

// Numerically stable softmax of logits / temperature (temperature > 0).
ProbDist softmax(std::span<const float> logits, float temperature = 1.0f);

// Index of the largest entry; the lowest index wins exact ties.
int argmax(std::span<const float> x);

struct SampleResult {
    int token = 0;
    ProbDist dist;
};

// temperature == 0 picks the argmax and reports a one-hot distribution;
// temperature > 0 samples from softmax(logits / temperature). Negative
// temperature throws std::invalid_argument.
SampleResult softmax_sample(std::span<const float> logits, float temperature, Rng &rng);

// Draw from an explicit distribution by CDF inversion.
int sample_from_dist(const ProbDist &dist, Rng &rng);

bool all_finite(std::span<const float> x);

} // namespace clasp
