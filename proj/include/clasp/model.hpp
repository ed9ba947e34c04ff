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
#include <span>
#include <vector>

#include "clasp/numerics.hpp"

namespace clasp {

struct ModelConfig {
    int num_layers = 16;
    int hidden_size = 128;
    int num_heads = 4;
    int ffn_size = 512;
    int vocab_size = 256;
    int max_positions = 1024;

    int head_dim() const { return hidden_size / num_heads; }
    void validate() const; // throws std::invalid_argument
};

// One pre-norm decoder layer: RMS-normed causal attention with rotary
// position embeddings, then an RMS-normed SwiGLU feed-forward block, each
// added back through a residual connection.
struct LayerWeights {
    Mat wq, wk, wv, wo;  // hidden x hidden
    Vec attn_norm;       // hidden
    Vec ffn_norm;        // hidden
    Mat w_gate, w_up;    // hidden x ffn
    Mat w_down;          // ffn x hidden
};

struct ModelWeights {
    Mat token_embedding; // vocab x hidden
    std::vector<LayerWeights> layers;
    Vec final_norm; // hidden
    Mat lm_head;    // hidden x vocab
};

struct Model {
    ModelConfig config;
    ModelWeights weights;
};

// Deterministic pseudo-random initialization: normal(0, 0.02) everywhere
// except the residual-output projections (wo, w_down) which use
// 0.02 / sqrt(2 * num_layers); norm gains start at 1.
ModelWeights init_weights(const ModelConfig &config, uint64_t seed);

size_t param_count(const ModelConfig &config);

// Binary vector over layers; 1 marks a layer the draft pass skips.
struct SkipSet {
    std::vector<uint8_t> mask;

    SkipSet() = default;
    explicit SkipSet(int num_layers) : mask(num_layers, 0) {}
    static SkipSet from_indices(int num_layers, std::span<const int> skipped);

    int size() const { return int(mask.size()); }
    int count() const;
    bool skips(int layer) const { return mask[layer] != 0; }
    std::vector<int> indices() const;
    bool operator==(const SkipSet &other) const { return mask == other.mask; }
};

// Per-layer hidden states of one token position: hidden[0] is the
// post-embedding state, hidden[l] the state after layer l-1, up to
// hidden[L] just before the final norm.
struct ForwardTrace {
    std::vector<Vec> hidden;
    int position = -1;
};

struct LayerKV {
    std::vector<float> keys;   // len x hidden, post-rotary
    std::vector<float> values; // len x hidden
    int len = 0;               // entries present; entry i sits at absolute position i
    int exact = 0;             // prefix entries holding exact full-model values
};

struct KVCache {
    std::vector<LayerKV> layers;
};

struct ForwardResult {
    std::vector<Vec> logits;          // one per input position
    std::vector<ForwardTrace> traces; // one per input position
};

struct SkipStepResult {
    Vec logits;
    float confidence = 0.0f; // top softmax probability of the logits
};

// A model/cache pair for one decoding stream. Sessions are single-threaded;
// distinct sessions over the same Model may run concurrently. Copying a
// session snapshots its cache, which makes replay experiments cheap.
class Session {
public:
    explicit Session(const Model &model);

    const Model &model() const { return *model_; }
    const ModelConfig &config() const { return model_->config; }
    const KVCache &cache() const { return cache_; }

    // Positions holding exact full-model K/V at every layer.
    int committed_len() const { return committed_; }
    // Logical sequence length including any draft positions.
    int seq_len() const { return seq_len_; }

    // Runs every given token through all layers with causal masking,
    // appending exact K/V. Requires a draft-free cache (seq_len ==
    // committed_len). Returns logits and the per-layer hidden-state trace
    // for every input position.
    ForwardResult full_forward(std::span<const int> tokens);

    // One draft step: applies only layers the skip set keeps, appending
    // draft K/V at those layers; skipped layers do not grow.
    SkipStepResult skip_forward(int token, const SkipSet &skip);

    // Applies decoder layer `layer` to one state at `position`, attending to
    // that layer's cache entries below `position` plus the state itself.
    // With append, the state's K/V are added to the layer cache, which must
    // be exactly `position` entries long.
    Vec layer_forward(int layer, const Vec &state, int position, bool append);

    // Applies one layer to several candidate states as a sequence sharing
    // the cache: candidate i attends to cache entries below `position` and
    // to its own K/V only, per a mask that hides the other candidates.
    // Nothing is appended.
    std::vector<Vec> batched_candidate_forward(int layer, const std::vector<Vec> &candidates,
                                               int position) const;

    // Truncates every layer to committed_length exact entries, discarding
    // draft entries and rejected positions.
    void rollback(int committed_length);

private:
    Vec attention_block(int layer, const Vec &state, int position, bool append);
    Vec ffn_block(int layer, const Vec &state) const;
    Vec logits_from_state(const Vec &state) const;
    void check_position(int position) const;

    const Model *model_;
    KVCache cache_;
    int committed_ = 0;
    int seq_len_ = 0;
};

// cos/sin rotary rotation of one head-sized row at the given position.
void apply_rope(std::span<float> row, int position, int num_heads, int head_dim);

} // namespace clasp
