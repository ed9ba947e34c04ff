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

#include "clasp/spec_engine.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "clasp/errors.hpp"

namespace clasp {

Mode mode_from_string(const std::string &name) {
    if (name == "autoregressive") return Mode::autoregressive;
    if (name == "clasp") return Mode::clasp;
    if (name == "static_skip") return Mode::static_skip;
    if (name == "random_skip") return Mode::random_skip;
    throw std::invalid_argument("unknown mode: " + name);
}

std::string mode_to_string(Mode mode) {
    switch (mode) {
    case Mode::autoregressive: return "autoregressive";
    case Mode::clasp: return "clasp";
    case Mode::static_skip: return "static_skip";
    case Mode::random_skip: return "random_skip";
    }
    throw std::logic_error("unhandled mode");
}

void DraftConfig::validate(const ModelConfig &model) const {
    opt.validate(model);
    if (max_draft < 1) {
        throw std::invalid_argument("DraftConfig: max_draft must be >= 1");
    }
    if (!(det >= 0.0f && det <= 1.0f)) {
        throw std::invalid_argument("DraftConfig: det must be in [0, 1]");
    }
    if (!(temperature >= 0.0f)) {
        throw std::invalid_argument("DraftConfig: temperature must be >= 0");
    }
    if (max_new_tokens < 1) {
        throw std::invalid_argument("DraftConfig: max_new_tokens must be >= 1");
    }
    if (opt_interval < 1) {
        throw std::invalid_argument("DraftConfig: opt_interval must be >= 1");
    }
}

namespace {

using Clock = std::chrono::steady_clock;

int64_t ns_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

} // namespace

DraftResult draft_stage(Session &session, int pending_token, const SkipSet &skip,
                        const DraftConfig &cfg, int budget, Rng &rng) {
    DraftResult out;
    int input = pending_token;
    for (int k = 0; k < budget; ++k) {
        SkipStepResult step = session.skip_forward(input, skip);
        SampleResult pick = softmax_sample(step.logits, cfg.temperature, rng);
        float confidence = step.confidence;
        if (cfg.temperature > 0.0f) {
            confidence = *std::max_element(pick.dist.begin(), pick.dist.end());
        }
        out.tokens.push_back(pick.token);
        out.dists.push_back(std::move(pick.dist));
        out.confidences.push_back(confidence);
        input = pick.token;
        if (confidence < cfg.det) {
            break;
        }
    }
    return out;
}

VerifyResult verify_stage(Session &session, int pending_token, const DraftResult &draft,
                          const DraftConfig &cfg, Rng &rng) {
    if (draft.tokens.empty()) {
        throw std::invalid_argument("verify_stage: no draft tokens");
    }
    const int count = int(draft.tokens.size());
    session.rollback(session.committed_len());
    const int base = session.committed_len();

    std::vector<int> batch;
    batch.reserve(count + 1);
    batch.push_back(pending_token);
    batch.insert(batch.end(), draft.tokens.begin(), draft.tokens.end());
    ForwardResult fwd = session.full_forward(batch);

    VerifyResult out;
    if (cfg.temperature == 0.0f) {
        int a = 0;
        while (a < count && argmax(fwd.logits[a]) == draft.tokens[a]) {
            out.emitted.push_back(draft.tokens[a]);
            ++a;
        }
        out.accepted = a;
        if (a == count) {
            out.emitted.push_back(argmax(fwd.logits[count]));
            out.bonus = true;
        } else {
            out.emitted.push_back(argmax(fwd.logits[a]));
        }
    } else {
        int a = 0;
        for (; a < count; ++a) {
            const ProbDist p = softmax(fwd.logits[a], cfg.temperature);
            const ProbDist &q = draft.dists[a];
            const int token = draft.tokens[a];
            const double u = rng.uniform();
            if (u * double(q[token]) < double(p[token])) {
                out.emitted.push_back(token);
                continue;
            }
            ProbDist residual(p.size());
            double z = 0.0;
            for (size_t i = 0; i < p.size(); ++i) {
                residual[i] = std::max(0.0f, p[i] - q[i]);
                z += residual[i];
            }
            if (z > 0.0) {
                for (float &v : residual) {
                    v = float(double(v) / z);
                }
                out.emitted.push_back(sample_from_dist(residual, rng));
            } else {
                out.emitted.push_back(sample_from_dist(p, rng));
            }
            break;
        }
        out.accepted = a;
        if (a == count) {
            const ProbDist p = softmax(fwd.logits[count], cfg.temperature);
            out.emitted.push_back(sample_from_dist(p, rng));
            out.bonus = true;
        }
    }

    out.trace = std::move(fwd.traces[out.accepted]);
    session.rollback(base + out.accepted + 1);
    return out;
}

std::optional<LayerOptResult> maybe_optimize(Session &session, int cycle_index,
                                             const ForwardTrace &trace, const DraftConfig &cfg) {
    if (cycle_index % cfg.opt_interval != 0) {
        return std::nullopt;
    }
    return optimize_skip_set(session, trace, cfg.opt);
}

GenerationResult generate(const Model &model, std::span<const int> prompt,
                          const DraftConfig &cfg, Mode mode, Rng &rng) {
    cfg.validate(model.config);
    if (prompt.empty()) {
        throw std::invalid_argument("generate: prompt is empty");
    }
    if (int(prompt.size()) + cfg.max_new_tokens > model.config.max_positions) {
        throw context_overflow_error("prompt of " + std::to_string(prompt.size()) + " plus " +
                                     std::to_string(cfg.max_new_tokens) +
                                     " new tokens exceeds max_positions " +
                                     std::to_string(model.config.max_positions));
    }

    const auto t_start = Clock::now();
    Session session(model);
    ForwardResult prefill = session.full_forward(prompt);
    session.rollback(int(prompt.size()) - 1);
    int pending = prompt.back();

    GenerationResult out;
    const bool speculative = mode != Mode::autoregressive;
    SkipSet skip(model.config.num_layers);
    int64_t seed_opt_ns = 0;
    if (mode == Mode::static_skip) {
        skip = evenly_spaced_skip_set(model.config, cfg.opt);
    } else if (mode == Mode::random_skip) {
        skip = random_skip_set(model.config, cfg.opt, rng);
    } else if (mode == Mode::clasp) {
        const auto t0 = Clock::now();
        LayerOptResult init = optimize_skip_set(session, prefill.traces.back(), cfg.opt);
        seed_opt_ns = ns_since(t0);
        skip = init.skip;
        out.optimizer_runs += 1;
    }

    int remaining = cfg.max_new_tokens;
    int cycle_index = 0;
    while (remaining > 0) {
        cycle_index += 1;
        CycleStats stats;
        stats.skip_snapshot = skip;
        const int budget = speculative ? std::min(cfg.max_draft, remaining - 1) : 0;

        if (budget >= 1) {
            const auto t0 = Clock::now();
            DraftResult draft = draft_stage(session, pending, skip, cfg, budget, rng);
            stats.draft_ns = ns_since(t0);
            stats.drafted = int(draft.tokens.size());

            const auto t1 = Clock::now();
            VerifyResult ver = verify_stage(session, pending, draft, cfg, rng);
            stats.verify_ns = ns_since(t1);
            stats.accepted = ver.accepted;
            stats.emitted = int(ver.emitted.size());
            stats.bonus_emitted = ver.bonus;
            out.tokens.insert(out.tokens.end(), ver.emitted.begin(), ver.emitted.end());
            pending = out.tokens.back();
            remaining -= int(ver.emitted.size());

            if (mode == Mode::clasp) {
                const auto t2 = Clock::now();
                if (auto res = maybe_optimize(session, cycle_index, ver.trace, cfg)) {
                    skip = res->skip;
                    stats.optimized = true;
                    out.optimizer_runs += 1;
                }
                stats.optimize_ns = ns_since(t2);
            }
        } else {
            const auto t1 = Clock::now();
            ForwardResult fwd = session.full_forward(std::span<const int>(&pending, 1));
            int token;
            if (cfg.temperature == 0.0f) {
                token = argmax(fwd.logits[0]);
            } else {
                token = softmax_sample(fwd.logits[0], cfg.temperature, rng).token;
            }
            stats.verify_ns = ns_since(t1);
            stats.emitted = 1;
            out.tokens.push_back(token);
            pending = token;
            remaining -= 1;
        }

        if (cycle_index == 1) {
            stats.optimize_ns += seed_opt_ns;
        }
        out.total_drafted += stats.drafted;
        out.total_accepted += stats.accepted;
        out.cycles.push_back(std::move(stats));
    }

    out.wall_ns = ns_since(t_start);
    return out;
}

} // namespace clasp
