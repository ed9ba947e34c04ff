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

#include "clasp/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "clasp/errors.hpp"

namespace clasp {

void ModelConfig::validate() const {
    if (num_layers < 1) throw std::invalid_argument("ModelConfig: num_layers must be >= 1");
    if (hidden_size < 1) throw std::invalid_argument("ModelConfig: hidden_size must be >= 1");
    if (num_heads < 1) throw std::invalid_argument("ModelConfig: num_heads must be >= 1");
    if (ffn_size < 1) throw std::invalid_argument("ModelConfig: ffn_size must be >= 1");
    if (vocab_size < 1) throw std::invalid_argument("ModelConfig: vocab_size must be >= 1");
    if (max_positions < 1) throw std::invalid_argument("ModelConfig: max_positions must be >= 1");
    if (hidden_size % num_heads != 0) {
        throw std::invalid_argument("ModelConfig: hidden_size must be divisible by num_heads");
    }
    if (head_dim() % 2 != 0) {
        throw std::invalid_argument("ModelConfig: head dimension must be even for rotary pairs");
    }
}

namespace {

void fill_normal(std::vector<float> &data, float std_dev, Rng &rng) {
    for (float &v : data) {
        v = float(rng.normal()) * std_dev;
    }
}

float silu(float x) {
    return x / (1.0f + std::exp(-x));
}

} // namespace

ModelWeights init_weights(const ModelConfig &config, uint64_t seed) {
    config.validate();
    Rng rng(seed);
    const int d = config.hidden_size;
    const int ffn = config.ffn_size;
    const float base_std = 0.02f;
    const float resid_std = base_std / std::sqrt(2.0f * float(config.num_layers));

    ModelWeights w;
    w.token_embedding = Mat(config.vocab_size, d);
    fill_normal(w.token_embedding.data, base_std, rng);

    w.layers.resize(config.num_layers);
    for (auto &layer : w.layers) {
        layer.wq = Mat(d, d);
        layer.wk = Mat(d, d);
        layer.wv = Mat(d, d);
        layer.wo = Mat(d, d);
        fill_normal(layer.wq.data, base_std, rng);
        fill_normal(layer.wk.data, base_std, rng);
        fill_normal(layer.wv.data, base_std, rng);
        fill_normal(layer.wo.data, resid_std, rng);
        layer.attn_norm.assign(d, 1.0f);
        layer.ffn_norm.assign(d, 1.0f);
        layer.w_gate = Mat(d, ffn);
        layer.w_up = Mat(d, ffn);
        layer.w_down = Mat(ffn, d);
        fill_normal(layer.w_gate.data, base_std, rng);
        fill_normal(layer.w_up.data, base_std, rng);
        fill_normal(layer.w_down.data, resid_std, rng);
    }

    w.final_norm.assign(d, 1.0f);
    w.lm_head = Mat(d, config.vocab_size);
    fill_normal(w.lm_head.data, base_std, rng);
    return w;
}

size_t param_count(const ModelConfig &config) {
    const size_t d = config.hidden_size;
    const size_t ffn = config.ffn_size;
    const size_t v = config.vocab_size;
    const size_t per_layer = 4 * d * d + 2 * d + 2 * d * ffn + ffn * d;
    return v * d + size_t(config.num_layers) * per_layer + d + d * v;
}

SkipSet SkipSet::from_indices(int num_layers, std::span<const int> skipped) {
    SkipSet s(num_layers);
    for (int idx : skipped) {
        if (idx < 0 || idx >= num_layers) {
            throw std::invalid_argument("SkipSet: layer index out of range");
        }
        s.mask[idx] = 1;
    }
    return s;
}

int SkipSet::count() const {
    int n = 0;
    for (uint8_t b : mask) {
        n += b != 0;
    }
    return n;
}

std::vector<int> SkipSet::indices() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i) {
        if (mask[i]) {
            out.push_back(i);
        }
    }
    return out;
}

void apply_rope(std::span<float> row, int position, int num_heads, int head_dim) {
    const double pos = double(position);
    for (int h = 0; h < num_heads; ++h) {
        float *head = row.data() + size_t(h) * head_dim;
        for (int i = 0; i < head_dim / 2; ++i) {
            const double freq = std::pow(10000.0, -2.0 * double(i) / double(head_dim));
            const double angle = pos * freq;
            const float c = float(std::cos(angle));
            const float s = float(std::sin(angle));
            const float x0 = head[2 * i];
            const float x1 = head[2 * i + 1];
            head[2 * i] = x0 * c - x1 * s;
            head[2 * i + 1] = x0 * s + x1 * c;
        }
    }
}

Session::Session(const Model &model) : model_(&model) {
    model.config.validate();
    cache_.layers.resize(model.config.num_layers);
}

void Session::check_position(int position) const {
    if (position < 0 || position >= config().max_positions) {
        throw context_overflow_error("position " + std::to_string(position) +
                                     " exceeds max_positions " +
                                     std::to_string(config().max_positions));
    }
}

Vec Session::attention_block(int layer, const Vec &state, int position, bool append) {
    const auto &lw = model_->weights.layers[layer];
    auto &kv = cache_.layers[layer];
    const int d = config().hidden_size;
    const int heads = config().num_heads;
    const int hd = config().head_dim();

    if (position > kv.len) {
        throw std::logic_error("layer " + std::to_string(layer) + " cache has " +
                               std::to_string(kv.len) + " entries, position " +
                               std::to_string(position) + " would leave a gap");
    }

    Vec x = rms_norm(state, lw.attn_norm);
    Vec q = matvec(x, lw.wq);
    Vec k = matvec(x, lw.wk);
    Vec v = matvec(x, lw.wv);
    apply_rope(q, position, heads, hd);
    apply_rope(k, position, heads, hd);

    // visible prefix: entry i sits at absolute position i
    const int n = std::min(position, kv.len);
    const float scale = 1.0f / std::sqrt(float(hd));

    Vec attn(d, 0.0f);
    std::vector<float> scores(size_t(n) + 1);
    for (int h = 0; h < heads; ++h) {
        const int off = h * hd;
        for (int j = 0; j < n; ++j) {
            const float *kj = kv.keys.data() + size_t(j) * d + off;
            double s = 0.0;
            for (int t = 0; t < hd; ++t) {
                s += double(q[off + t]) * kj[t];
            }
            scores[j] = float(s) * scale;
        }
        {
            double s = 0.0;
            for (int t = 0; t < hd; ++t) {
                s += double(q[off + t]) * k[off + t];
            }
            scores[n] = float(s) * scale;
        }
        ProbDist probs = softmax(std::span<const float>(scores.data(), size_t(n) + 1));
        float *out = attn.data() + off;
        for (int j = 0; j < n; ++j) {
            const float *vj = kv.values.data() + size_t(j) * d + off;
            const float p = probs[j];
            for (int t = 0; t < hd; ++t) {
                out[t] += p * vj[t];
            }
        }
        const float ps = probs[n];
        for (int t = 0; t < hd; ++t) {
            out[t] += ps * v[off + t];
        }
    }

    Vec res(state);
    matvec_accum(attn, lw.wo, res);

    if (append) {
        if (kv.len != position) {
            throw std::logic_error("layer cache length " + std::to_string(kv.len) +
                                   " does not match append position " + std::to_string(position));
        }
        kv.keys.insert(kv.keys.end(), k.begin(), k.end());
        kv.values.insert(kv.values.end(), v.begin(), v.end());
        kv.len += 1;
    }
    return res;
}

Vec Session::ffn_block(int layer, const Vec &state) const {
    const auto &lw = model_->weights.layers[layer];
    Vec y = rms_norm(state, lw.ffn_norm);
    Vec gate = matvec(y, lw.w_gate);
    Vec up = matvec(y, lw.w_up);
    for (size_t i = 0; i < gate.size(); ++i) {
        gate[i] = silu(gate[i]) * up[i];
    }
    Vec res(state);
    matvec_accum(gate, lw.w_down, res);
    return res;
}

Vec Session::layer_forward(int layer, const Vec &state, int position, bool append) {
    if (layer < 0 || layer >= config().num_layers) {
        throw std::invalid_argument("layer_forward: layer index out of range");
    }
    if (int(state.size()) != config().hidden_size) {
        throw std::invalid_argument("layer_forward: state has wrong dimension");
    }
    check_position(position);
    Vec h = attention_block(layer, state, position, append);
    return ffn_block(layer, h);
}

Vec Session::logits_from_state(const Vec &state) const {
    Vec y = rms_norm(state, model_->weights.final_norm);
    return matvec(y, model_->weights.lm_head);
}

ForwardResult Session::full_forward(std::span<const int> tokens) {
    if (tokens.empty()) {
        throw std::invalid_argument("full_forward: empty token sequence");
    }
    if (seq_len_ != committed_) {
        throw std::logic_error("full_forward requires a draft-free cache; call rollback first");
    }
    if (committed_ + int(tokens.size()) > config().max_positions) {
        throw context_overflow_error("full_forward: sequence of " +
                                     std::to_string(committed_ + int(tokens.size())) +
                                     " exceeds max_positions " +
                                     std::to_string(config().max_positions));
    }
    const int num_layers = config().num_layers;
    ForwardResult out;
    out.logits.reserve(tokens.size());
    out.traces.reserve(tokens.size());

    for (int token : tokens) {
        if (token < 0 || token >= config().vocab_size) {
            throw std::invalid_argument("full_forward: token id " + std::to_string(token) +
                                        " outside vocabulary");
        }
        const float *emb = model_->weights.token_embedding.row(token);
        Vec h(emb, emb + config().hidden_size);

        ForwardTrace trace;
        trace.position = committed_;
        trace.hidden.reserve(num_layers + 1);
        trace.hidden.push_back(h);
        for (int l = 0; l < num_layers; ++l) {
            h = layer_forward(l, h, committed_, /*append=*/true);
            trace.hidden.push_back(h);
        }
        committed_ += 1;
        seq_len_ = committed_;
        for (auto &kv : cache_.layers) {
            kv.exact = kv.len;
        }
        out.logits.push_back(logits_from_state(h));
        out.traces.push_back(std::move(trace));
    }
    return out;
}

SkipStepResult Session::skip_forward(int token, const SkipSet &skip) {
    if (skip.size() != config().num_layers) {
        throw std::invalid_argument("skip_forward: skip set size does not match layer count");
    }
    if (token < 0 || token >= config().vocab_size) {
        throw std::invalid_argument("skip_forward: token id outside vocabulary");
    }
    const int position = seq_len_;
    check_position(position);

    const float *emb = model_->weights.token_embedding.row(token);
    Vec h(emb, emb + config().hidden_size);
    for (int l = 0; l < config().num_layers; ++l) {
        if (!skip.skips(l)) {
            h = layer_forward(l, h, position, /*append=*/true);
        }
    }
    seq_len_ += 1;

    SkipStepResult res;
    res.logits = logits_from_state(h);
    float max_logit = res.logits[0];
    for (float v : res.logits) {
        max_logit = std::max(max_logit, v);
    }
    double sum = 0.0;
    for (float v : res.logits) {
        sum += std::exp(double(v - max_logit));
    }
    res.confidence = float(1.0 / sum);
    return res;
}

std::vector<Vec> Session::batched_candidate_forward(int layer, const std::vector<Vec> &candidates,
                                                    int position) const {
    if (candidates.empty()) {
        throw std::invalid_argument("batched_candidate_forward: no candidates");
    }
    if (layer < 0 || layer >= config().num_layers) {
        throw std::invalid_argument("batched_candidate_forward: layer index out of range");
    }
    check_position(position);
    const int count = int(candidates.size());
    const int d = config().hidden_size;
    const int heads = config().num_heads;
    const int hd = config().head_dim();
    const auto &lw = model_->weights.layers[layer];
    const auto &kv = cache_.layers[layer];
    const int n = std::min(position, kv.len);

    Mat x_in(count, d);
    Mat x_norm(count, d);
    for (int i = 0; i < count; ++i) {
        if (int(candidates[i].size()) != d) {
            throw std::invalid_argument("batched_candidate_forward: candidate has wrong dimension");
        }
        std::copy(candidates[i].begin(), candidates[i].end(), x_in.row(i));
        Vec normed = rms_norm(candidates[i], lw.attn_norm);
        std::copy(normed.begin(), normed.end(), x_norm.row(i));
    }

    Mat q = matmul(x_norm, lw.wq);
    Mat k = matmul(x_norm, lw.wk);
    Mat v = matmul(x_norm, lw.wv);
    for (int i = 0; i < count; ++i) {
        apply_rope(std::span<float>(q.row(i), d), position, heads, hd);
        apply_rope(std::span<float>(k.row(i), d), position, heads, hd);
    }

    // The candidates ride along as a sequence after the shared prefix. The
    // mask exposes columns [0, n) to every row and column n + i to row i
    // only, so siblings never see each other and the cache is not copied.
    const int total_cols = n + count;
    std::vector<uint8_t> mask(size_t(count) * total_cols, 0);
    for (int i = 0; i < count; ++i) {
        uint8_t *row = mask.data() + size_t(i) * total_cols;
        std::fill(row, row + n, 1);
        row[n + i] = 1;
    }

    const float scale = 1.0f / std::sqrt(float(hd));
    Mat attn(count, d);
    std::vector<float> scores(total_cols);
    for (int i = 0; i < count; ++i) {
        const uint8_t *allowed = mask.data() + size_t(i) * total_cols;
        for (int h = 0; h < heads; ++h) {
            const int off = h * hd;
            const float *qrow = q.row(i) + off;
            int used = 0;
            for (int col = 0; col < total_cols; ++col) {
                if (!allowed[col]) {
                    continue;
                }
                const float *krow = col < n ? kv.keys.data() + size_t(col) * d + off
                                            : k.row(col - n) + off;
                double s = 0.0;
                for (int t = 0; t < hd; ++t) {
                    s += double(qrow[t]) * krow[t];
                }
                scores[used++] = float(s) * scale;
            }
            ProbDist probs = softmax(std::span<const float>(scores.data(), size_t(used)));
            float *out = attn.row(i) + off;
            int pi = 0;
            for (int col = 0; col < total_cols; ++col) {
                if (!allowed[col]) {
                    continue;
                }
                const float *vrow = col < n ? kv.values.data() + size_t(col) * d + off
                                            : v.row(col - n) + off;
                const float p = probs[pi++];
                for (int t = 0; t < hd; ++t) {
                    out[t] += p * vrow[t];
                }
            }
        }
    }

    // residual-first accumulation keeps both routes bitwise identical
    Mat h1 = x_in;
    matmul_accum(attn, lw.wo, h1);

    Mat y(count, d);
    for (int i = 0; i < count; ++i) {
        Vec normed = rms_norm(std::span<const float>(h1.row(i), d), lw.ffn_norm);
        std::copy(normed.begin(), normed.end(), y.row(i));
    }
    Mat gate = matmul(y, lw.w_gate);
    Mat up = matmul(y, lw.w_up);
    for (size_t i = 0; i < gate.data.size(); ++i) {
        gate.data[i] = silu(gate.data[i]) * up.data[i];
    }
    Mat h2 = h1;
    matmul_accum(gate, lw.w_down, h2);

    std::vector<Vec> out(count);
    for (int i = 0; i < count; ++i) {
        const float *row = h2.row(i);
        out[i].assign(row, row + d);
    }
    return out;
}

void Session::rollback(int committed_length) {
    if (committed_length < 0 || committed_length > committed_) {
        throw std::invalid_argument("rollback: target " + std::to_string(committed_length) +
                                    " outside [0, " + std::to_string(committed_) + "]");
    }
    const size_t d = size_t(config().hidden_size);
    for (auto &kv : cache_.layers) {
        kv.keys.resize(size_t(committed_length) * d);
        kv.values.resize(size_t(committed_length) * d);
        kv.len = committed_length;
        kv.exact = committed_length;
    }
    committed_ = committed_length;
    seq_len_ = committed_length;
}

} // namespace clasp
