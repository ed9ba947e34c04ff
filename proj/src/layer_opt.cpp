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

#include "clasp/layer_opt.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "clasp/errors.hpp"
#include "clasp/numerics.hpp"

namespace clasp {

void LayerOptConfig::validate(const ModelConfig &model) const {
    model.validate();
    if (max_skip < 0) throw std::invalid_argument("LayerOptConfig: max_skip must be >= 0");
    if (pin_front < 0) throw std::invalid_argument("LayerOptConfig: pin_front must be >= 0");
    if (pin_back < 0) throw std::invalid_argument("LayerOptConfig: pin_back must be >= 0");
}

bool LayerOptConfig::pinned(int layer, const ModelConfig &model) const {
    return layer < pin_front || layer >= model.num_layers - pin_back;
}

int LayerOptConfig::free_count(const ModelConfig &model) const {
    int n = 0;
    for (int l = 0; l < model.num_layers; ++l) {
        n += pinned(l, model) ? 0 : 1;
    }
    return n;
}

namespace {

void check_trace(const ForwardTrace &trace, const ModelConfig &model) {
    if (int(trace.hidden.size()) != model.num_layers + 1) {
        throw std::invalid_argument("trace must hold one hidden state per layer boundary, got " +
                                    std::to_string(trace.hidden.size()));
    }
    if (trace.position < 0) {
        throw std::invalid_argument("trace has no position");
    }
}

} // namespace

LayerOptResult optimize_skip_set(Session &session, const ForwardTrace &trace,
                                 const LayerOptConfig &cfg) {
    const ModelConfig &mc = session.config();
    cfg.validate(mc);
    check_trace(trace, mc);
    const int num_layers = mc.num_layers;
    const int pos = trace.position;

    std::vector<int> free_prefix(num_layers + 1, 0);
    for (int l = 0; l < num_layers; ++l) {
        free_prefix[l + 1] = free_prefix[l] + (cfg.pinned(l, mc) ? 0 : 1);
    }
    const int budget = std::min(cfg.max_skip, free_prefix[num_layers]);

    LayerOptResult out;
    out.skip = SkipSet(num_layers);
    if (budget == 0) {
        out.score = 1.0;
        return out;
    }

    // g[i][j]: closest reachable stand-in for the exact state after layer i
    // with exactly j skips spent; chose_skip records the winning transition.
    std::vector<std::vector<Vec>> g(num_layers + 1);
    std::vector<std::vector<uint8_t>> chose_skip(num_layers + 1);
    for (int i = 0; i <= num_layers; ++i) {
        const int width = std::min(free_prefix[i], budget);
        g[i].resize(width + 1);
        chose_skip[i].assign(width + 1, 0);
    }
    g[0][0] = trace.hidden[0];

    for (int i = 1; i <= num_layers; ++i) {
        const int layer = i - 1;
        const bool layer_pinned = cfg.pinned(layer, mc);
        const int width = std::min(free_prefix[i], budget);
        const int prev_width = std::min(free_prefix[i - 1], budget);
        const Vec &exact = trace.hidden[i];

        g[i][0] = exact;

        const int apply_hi = std::min(width, prev_width);
        std::vector<Vec> applied;
        if (apply_hi >= 1) {
            if (cfg.batched) {
                std::vector<Vec> cands(g[i - 1].begin() + 1, g[i - 1].begin() + apply_hi + 1);
                applied = session.batched_candidate_forward(layer, cands, pos);
            } else {
                applied.reserve(apply_hi);
                for (int j = 1; j <= apply_hi; ++j) {
                    applied.push_back(session.layer_forward(layer, g[i - 1][j], pos,
                                                            /*append=*/false));
                }
            }
        }

        for (int j = 1; j <= width; ++j) {
            const bool can_skip = !layer_pinned && j - 1 <= prev_width;
            const bool can_apply = j <= prev_width;
            if (can_skip && can_apply) {
                const double sim_skip = cosine_similarity(g[i - 1][j - 1], exact);
                const double sim_apply = cosine_similarity(applied[j - 1], exact);
                if (sim_apply > sim_skip) {
                    g[i][j] = applied[j - 1];
                } else {
                    g[i][j] = g[i - 1][j - 1];
                    chose_skip[i][j] = 1;
                }
            } else if (can_skip) {
                g[i][j] = g[i - 1][j - 1];
                chose_skip[i][j] = 1;
            } else if (can_apply) {
                g[i][j] = applied[j - 1];
            } else {
                throw std::logic_error("unreachable layer optimizer cell");
            }
        }
    }

    out.score = cosine_similarity(g[num_layers][budget], trace.hidden[num_layers]);
    int j = budget;
    for (int i = num_layers; i > 0 && j > 0; --i) {
        if (chose_skip[i][j]) {
            out.skip.mask[i - 1] = 1;
            --j;
        }
    }
    if (j != 0) {
        throw std::logic_error("layer optimizer backtrack did not consume the budget");
    }
    return out;
}

double score_skip_set(Session &session, const ForwardTrace &trace, const SkipSet &skip) {
    const ModelConfig &mc = session.config();
    check_trace(trace, mc);
    if (skip.size() != mc.num_layers) {
        throw std::invalid_argument("skip set size does not match layer count");
    }
    Vec h = trace.hidden[0];
    for (int l = 0; l < mc.num_layers; ++l) {
        if (!skip.skips(l)) {
            h = session.layer_forward(l, h, trace.position, /*append=*/false);
        }
    }
    return cosine_similarity(h, trace.hidden[mc.num_layers]);
}

namespace {

size_t combination_count(int n, int k, size_t cap) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    size_t c = 1;
    for (int i = 1; i <= k; ++i) {
        if (c > cap) return cap + 1;
        c = c * size_t(n - k + i) / size_t(i);
    }
    return std::min(c, cap + 1);
}

} // namespace

BruteForceResult brute_force_skip_set(Session &session, const ForwardTrace &trace,
                                      const LayerOptConfig &cfg, size_t max_evaluations) {
    const ModelConfig &mc = session.config();
    cfg.validate(mc);
    check_trace(trace, mc);

    std::vector<int> free_layers;
    for (int l = 0; l < mc.num_layers; ++l) {
        if (!cfg.pinned(l, mc)) {
            free_layers.push_back(l);
        }
    }
    const int budget = std::min<int>(cfg.max_skip, int(free_layers.size()));

    const size_t total = combination_count(int(free_layers.size()), budget, max_evaluations);
    if (total > max_evaluations) {
        throw budget_exceeded_error("exhaustive search over " + std::to_string(free_layers.size()) +
                                    " choose " + std::to_string(budget) + " subsets exceeds " +
                                    std::to_string(max_evaluations) + " evaluations");
    }

    BruteForceResult best;
    best.skip = SkipSet(mc.num_layers);
    best.score = -2.0;

    if (budget == 0) {
        best.score = score_skip_set(session, trace, best.skip);
        best.evaluated = 1;
        return best;
    }

    std::vector<int> pick(budget);
    for (int i = 0; i < budget; ++i) {
        pick[i] = i;
    }
    std::vector<int> chosen(budget);
    while (true) {
        for (int i = 0; i < budget; ++i) {
            chosen[i] = free_layers[pick[i]];
        }
        SkipSet candidate = SkipSet::from_indices(mc.num_layers, chosen);
        const double score = score_skip_set(session, trace, candidate);
        best.evaluated += 1;
        if (score > best.score) {
            best.score = score;
            best.skip = candidate;
        }

        int i = budget - 1;
        while (i >= 0 && pick[i] == int(free_layers.size()) - budget + i) {
            --i;
        }
        if (i < 0) {
            break;
        }
        pick[i] += 1;
        for (int t = i + 1; t < budget; ++t) {
            pick[t] = pick[t - 1] + 1;
        }
    }
    return best;
}

SkipSet random_skip_set(const ModelConfig &model, const LayerOptConfig &cfg, Rng &rng) {
    cfg.validate(model);
    std::vector<int> free_layers;
    for (int l = 0; l < model.num_layers; ++l) {
        if (!cfg.pinned(l, model)) {
            free_layers.push_back(l);
        }
    }
    const int m = std::min<int>(cfg.max_skip, int(free_layers.size()));
    for (int i = 0; i < m; ++i) {
        const size_t j = size_t(i) + size_t(rng.uniform_int(free_layers.size() - size_t(i)));
        std::swap(free_layers[i], free_layers[j]);
    }
    return SkipSet::from_indices(model.num_layers,
                                 std::span<const int>(free_layers.data(), size_t(m)));
}

SkipSet evenly_spaced_skip_set(const ModelConfig &model, const LayerOptConfig &cfg) {
    cfg.validate(model);
    std::vector<int> free_layers;
    for (int l = 0; l < model.num_layers; ++l) {
        if (!cfg.pinned(l, model)) {
            free_layers.push_back(l);
        }
    }
    const int total = int(free_layers.size());
    const int m = std::min(cfg.max_skip, total);
    std::vector<int> chosen;
    for (int i = 0; i < m; ++i) {
        chosen.push_back(free_layers[size_t(i) * size_t(total) / size_t(m)]);
    }
    return SkipSet::from_indices(model.num_layers, chosen);
}

double jaccard_similarity(const SkipSet &a, const SkipSet &b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("jaccard_similarity: skip sets differ in layer count");
    }
    int inter = 0;
    int uni = 0;
    for (int i = 0; i < a.size(); ++i) {
        const bool in_a = a.skips(i);
        const bool in_b = b.skips(i);
        inter += (in_a && in_b) ? 1 : 0;
        uni += (in_a || in_b) ? 1 : 0;
    }
    if (uni == 0) {
        return 1.0;
    }
    return double(inter) / double(uni);
}

} // namespace clasp
