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

#include "clasp/model.hpp"
#include "clasp/rng.hpp"

namespace clasp {

struct LayerOptConfig {
    int max_skip = 8;   // skip budget M
    int pin_front = 1;  // first layers that are never skipped
    int pin_back = 1;   // last layers that are never skipped
    bool batched = true;

    void validate(const ModelConfig &model) const;
    bool pinned(int layer, const ModelConfig &model) const;
    int free_count(const ModelConfig &model) const;
};

struct LayerOptResult {
    SkipSet skip;
    double score = 0.0;  // cosine between the approximate and exact final state
};

// Dynamic program over the per-layer hidden states of one verified token.
// Cell (i, j) holds the best approximation of the exact state after layer i
// with exactly j layers skipped; each cell extends either by skipping layer
// i-1 (reuse the (i-1, j-1) state) or by applying it to the (i-1, j) state,
// keeping whichever lands closer to the exact trace by cosine. Skipped-layer
// transitions cost nothing, so one pass over the table covers every budget.
// Apply transitions for a column share the KV cache through one masked batch
// when cfg.batched is set, and fall back to per-candidate calls otherwise.
LayerOptResult optimize_skip_set(Session &session, const ForwardTrace &trace,
                                 const LayerOptConfig &cfg);

struct BruteForceResult {
    SkipSet skip;
    double score = 0.0;
    size_t evaluated = 0;
};

// Exhaustive reference: scores every exact-budget subset of free layers by
// final-state cosine and keeps the best. Throws budget_exceeded_error if the
// subset count exceeds max_evaluations.
BruteForceResult brute_force_skip_set(Session &session, const ForwardTrace &trace,
                                      const LayerOptConfig &cfg, size_t max_evaluations);

// Scores one concrete skip set against the trace (final-state cosine).
double score_skip_set(Session &session, const ForwardTrace &trace, const SkipSet &skip);

SkipSet random_skip_set(const ModelConfig &model, const LayerOptConfig &cfg, Rng &rng);
SkipSet evenly_spaced_skip_set(const ModelConfig &model, const LayerOptConfig &cfg);

double jaccard_similarity(const SkipSet &a, const SkipSet &b);

} // namespace clasp
