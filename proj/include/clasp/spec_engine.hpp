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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clasp/layer_opt.hpp"
#include "clasp/model.hpp"
#include "clasp/numerics.hpp"
#include "clasp/rng.hpp"

namespace clasp {

enum class Mode {
    autoregressive,
    clasp,
    static_skip,
    random_skip,
};

Mode mode_from_string(const std::string &name);
std::string mode_to_string(Mode mode);

struct DraftConfig {
    int max_draft = 8;      // draft tokens per cycle (K)
    float det = 0.7f;       // draft-exiting threshold on top probability
    float temperature = 0.0f;
    int max_new_tokens = 64;
    int opt_interval = 8;   // verifications between optimizer runs (LOI)
    LayerOptConfig opt;     // skip budget M, pins, batched evaluation

    void validate(const ModelConfig &model) const;
};

struct CycleStats {
    int drafted = 0;
    int accepted = 0;
    int emitted = 0;  // accepted drafts plus the correction or bonus token
    bool bonus_emitted = false;
    bool optimized = false;
    int64_t draft_ns = 0;
    int64_t verify_ns = 0;
    int64_t optimize_ns = 0;
    SkipSet skip_snapshot;
};

struct GenerationResult {
    std::vector<int> tokens;  // emitted only, prompt excluded
    std::vector<CycleStats> cycles;
    int64_t total_drafted = 0;
    int64_t total_accepted = 0;
    int optimizer_runs = 0;
    int64_t wall_ns = 0;
};

struct DraftResult {
    std::vector<int> tokens;
    std::vector<ProbDist> dists;   // distribution each token was drawn from
    std::vector<float> confidences;
};

struct VerifyResult {
    int accepted = 0;
    std::vector<int> emitted;  // accepted drafts, then correction or bonus
    bool bonus = false;
    ForwardTrace trace;  // per-layer states at the last accepted position
};

// Drafts up to `budget` tokens continuing from the pending token (the last
// committed token, not yet in the cache). Appends draft keys and values at
// the non-skipped layers; a later rollback discards them. Stops early when
// the draft's top probability falls below cfg.det; always drafts at least
// one token when budget >= 1. At temperature zero no rng draws are consumed.
DraftResult draft_stage(Session &session, int pending_token, const SkipSet &skip,
                        const DraftConfig &cfg, int budget, Rng &rng);

// Verifies drafts in one full forward over [pending, drafts...]. Temperature
// zero accepts while the verify argmax equals the draft and emits the argmax
// at the first mismatch; otherwise accepts token x with probability
// min(1, p(x)/q(x)), resamples rejections from the normalized residual
// max(0, p-q), and emits a bonus token from p when every draft survives.
// Rng draws, in order: one uniform per draft position until the first
// rejection, then one draw for the residual or bonus sample. Leaves the
// cache rolled back to the new committed boundary and returns the trace at
// the last accepted position.
VerifyResult verify_stage(Session &session, int pending_token, const DraftResult &draft,
                          const DraftConfig &cfg, Rng &rng);

// Runs the layer optimizer when the 1-based cycle index lands on the
// optimization interval.
std::optional<LayerOptResult> maybe_optimize(Session &session, int cycle_index,
                                             const ForwardTrace &trace, const DraftConfig &cfg);

// Full decoding loop. autoregressive: plain full-model decoding, one token
// per cycle. static_skip / random_skip: speculative loop with a fixed skip
// set (evenly spaced or drawn once from rng). clasp: speculative loop that
// seeds its skip set from the prompt's last trace and re-optimizes every
// opt_interval verifications from the last accepted token's trace.
GenerationResult generate(const Model &model, std::span<const int> prompt,
                          const DraftConfig &cfg, Mode mode, Rng &rng);

} // namespace clasp
