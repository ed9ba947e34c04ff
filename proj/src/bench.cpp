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

#include "clasp/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "clasp/errors.hpp"
#include "clasp/layer_opt.hpp"

namespace clasp {

using json = nlohmann::ordered_json;

double cost_model_speedup(std::span<const CycleStats> cycles, int num_layers, int skip_count,
                          int loi) {
    if (cycles.empty()) {
        throw std::invalid_argument("cost_model_speedup: no cycles");
    }
    if (skip_count < 0 || skip_count > num_layers) {
        throw std::invalid_argument("cost_model_speedup: skip_count outside [0, num_layers]");
    }
    double cost = 0.0;
    double emitted = 0.0;
    for (const auto &c : cycles) {
        cost += double(c.drafted) * double(num_layers - skip_count) + double(num_layers);
        if (loi > 0) {
            cost += double(num_layers) / double(loi);
        }
        emitted += double(c.emitted);
    }
    return emitted * double(num_layers) / cost;
}

namespace {

uint64_t child_seed(uint64_t seed, uint64_t mode_ordinal, uint64_t prompt_index) {
    const uint64_t a = Rng::mix(seed + 0x636c617370ull);
    const uint64_t b = Rng::mix(mode_ordinal + 1);
    const uint64_t c = Rng::mix(prompt_index + 1);
    return Rng::mix(a ^ (b * 0x9E3779B97F4A7C15ull) ^ (c * 0xC2B2AE3D27D4EB4Full));
}

std::vector<PromptRecord> sorted_records(const PromptSet &prompts) {
    std::vector<PromptRecord> recs = prompts.records;
    std::sort(recs.begin(), recs.end(),
              [](const PromptRecord &a, const PromptRecord &b) { return a.id < b.id; });
    return recs;
}

int resolved_max_new(const PromptRecord &rec, const DraftConfig &cfg) {
    return rec.max_new_tokens > 0 ? rec.max_new_tokens : cfg.max_new_tokens;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace

BenchReport run_benchmark(const Model &model, const PromptSet &prompts, const BenchConfig &cfg) {
    cfg.draft.validate(model.config);
    if (prompts.records.empty()) {
        throw std::invalid_argument("run_benchmark: empty prompt set");
    }
    const std::vector<PromptRecord> recs = sorted_records(prompts);

    std::vector<Mode> modes{Mode::autoregressive};
    for (Mode m : cfg.modes) {
        if (std::find(modes.begin(), modes.end(), m) == modes.end()) {
            modes.push_back(m);
        }
    }

    const int num_layers = model.config.num_layers;
    const int effective_skip =
        std::min(cfg.draft.opt.max_skip, cfg.draft.opt.free_count(model.config));

    BenchReport report;
    report.model = model.config;
    report.seed = cfg.seed;
    report.prompt_count = int(recs.size());
    report.default_max_new_tokens = cfg.draft.max_new_tokens;
    report.with_timing = cfg.with_timing;

    std::vector<std::vector<int>> baseline_tokens(recs.size());
    int64_t baseline_wall = 0;

    for (Mode mode : modes) {
        const bool speculative = mode != Mode::autoregressive;
        std::vector<CycleStats> all_cycles;
        int64_t wall = 0;
        int64_t draft_ns = 0;
        int64_t verify_ns = 0;
        int64_t optimize_ns = 0;
        int optimizer_runs = 0;
        int64_t emitted = 0;

        for (size_t i = 0; i < recs.size(); ++i) {
            DraftConfig dc = cfg.draft;
            dc.max_new_tokens = resolved_max_new(recs[i], cfg.draft);
            Rng rng(child_seed(cfg.seed, uint64_t(mode), i));
            GenerationResult r = generate(model, recs[i].tokens, dc, mode, rng);

            if (mode == Mode::autoregressive) {
                baseline_tokens[i] = r.tokens;
                baseline_wall += r.wall_ns;
            } else if (cfg.draft.temperature == 0.0f && r.tokens != baseline_tokens[i]) {
                throw std::logic_error("greedy output of mode " + mode_to_string(mode) +
                                       " diverged from the baseline on prompt " + recs[i].id);
            }
            wall += r.wall_ns;
            optimizer_runs += r.optimizer_runs;
            emitted += int64_t(r.tokens.size());
            for (const auto &c : r.cycles) {
                draft_ns += c.draft_ns;
                verify_ns += c.verify_ns;
                optimize_ns += c.optimize_ns;
            }
            all_cycles.insert(all_cycles.end(), r.cycles.begin(), r.cycles.end());
        }

        BenchRow row;
        row.mode = mode_to_string(mode);
        row.skip_count = speculative ? effective_skip : 0;
        row.max_draft = speculative ? cfg.draft.max_draft : 0;
        row.det = speculative ? double(cfg.draft.det) : 0.0;
        row.loi = mode == Mode::clasp ? cfg.draft.opt_interval : 0;
        row.temperature = double(cfg.draft.temperature);
        row.prompts = int(recs.size());
        row.cycles = int64_t(all_cycles.size());
        for (const auto &c : all_cycles) {
            row.total_drafted += c.drafted;
            row.total_accepted += c.accepted;
        }
        row.total_emitted = emitted;
        row.optimizer_runs = optimizer_runs;
        row.tau = double(emitted) / double(all_cycles.size());
        row.acceptance_rate =
            row.total_drafted > 0 ? double(row.total_accepted) / double(row.total_drafted) : 0.0;
        row.cost_speedup = cost_model_speedup(all_cycles, num_layers, row.skip_count, row.loi);
        if (cfg.with_timing) {
            row.wall_speedup = double(baseline_wall) / double(wall);
            const int64_t stage_total = draft_ns + verify_ns + optimize_ns;
            if (stage_total > 0) {
                row.draft_fraction = double(draft_ns) / double(stage_total);
                row.verify_fraction = double(verify_ns) / double(stage_total);
                row.optimize_fraction = double(optimize_ns) / double(stage_total);
            }
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

json report_to_json(const BenchReport &report) {
    json j;
    j["schema"] = "clasp-bench-report/1";
    j["model"] = {{"num_layers", report.model.num_layers},
                  {"hidden_size", report.model.hidden_size},
                  {"num_heads", report.model.num_heads},
                  {"ffn_size", report.model.ffn_size},
                  {"vocab_size", report.model.vocab_size},
                  {"max_positions", report.model.max_positions}};
    j["seed"] = report.seed;
    j["prompts"] = report.prompt_count;
    j["max_new_tokens"] = report.default_max_new_tokens;
    j["timing"] = report.with_timing;
    j["rows"] = json::array();
    for (const auto &row : report.rows) {
        json r;
        r["mode"] = row.mode;
        r["skip_count"] = row.skip_count;
        r["max_draft"] = row.max_draft;
        r["det"] = row.det;
        r["loi"] = row.loi;
        r["temperature"] = row.temperature;
        r["prompts"] = row.prompts;
        r["cycles"] = row.cycles;
        r["total_drafted"] = row.total_drafted;
        r["total_accepted"] = row.total_accepted;
        r["total_emitted"] = row.total_emitted;
        r["optimizer_runs"] = row.optimizer_runs;
        r["tau"] = row.tau;
        r["acceptance_rate"] = row.acceptance_rate;
        r["cost_speedup"] = row.cost_speedup;
        if (report.with_timing) {
            r["wall_speedup"] = row.wall_speedup;
            r["draft_fraction"] = row.draft_fraction;
            r["verify_fraction"] = row.verify_fraction;
            r["optimize_fraction"] = row.optimize_fraction;
        }
        j["rows"].push_back(std::move(r));
    }
    return j;
}

std::string report_to_csv(const BenchReport &report) {
    std::string out = "mode,skip_count,max_draft,det,loi,temperature,prompts,cycles,"
                      "total_drafted,total_accepted,total_emitted,optimizer_runs,tau,"
                      "acceptance_rate,cost_speedup";
    if (report.with_timing) {
        out += ",wall_speedup,draft_fraction,verify_fraction,optimize_fraction";
    }
    out += '\n';
    for (const auto &row : report.rows) {
        out += row.mode;
        out += ',' + std::to_string(row.skip_count);
        out += ',' + std::to_string(row.max_draft);
        out += ',' + fmt_double(row.det);
        out += ',' + std::to_string(row.loi);
        out += ',' + fmt_double(row.temperature);
        out += ',' + std::to_string(row.prompts);
        out += ',' + std::to_string(row.cycles);
        out += ',' + std::to_string(row.total_drafted);
        out += ',' + std::to_string(row.total_accepted);
        out += ',' + std::to_string(row.total_emitted);
        out += ',' + std::to_string(row.optimizer_runs);
        out += ',' + fmt_double(row.tau);
        out += ',' + fmt_double(row.acceptance_rate);
        out += ',' + fmt_double(row.cost_speedup);
        if (report.with_timing) {
            out += ',' + fmt_double(row.wall_speedup);
            out += ',' + fmt_double(row.draft_fraction);
            out += ',' + fmt_double(row.verify_fraction);
            out += ',' + fmt_double(row.optimize_fraction);
        }
        out += '\n';
    }
    return out;
}

void write_report(const BenchReport &report, const std::string &json_path,
                  const std::string &csv_path) {
    if (!json_path.empty()) {
        std::ofstream out(json_path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot open " + json_path + " for writing");
        }
        out << report_to_json(report).dump(2) << '\n';
        if (!out) {
            throw std::runtime_error("failed writing report to " + json_path);
        }
    }
    if (!csv_path.empty()) {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot open " + csv_path + " for writing");
        }
        out << report_to_csv(report);
        if (!out) {
            throw std::runtime_error("failed writing report to " + csv_path);
        }
    }
}

SweepParam sweep_param_from_string(const std::string &name) {
    if (name == "skip_count") return SweepParam::skip_count;
    if (name == "loi") return SweepParam::loi;
    if (name == "det") return SweepParam::det;
    throw std::invalid_argument("unknown sweep parameter: " + name);
}

std::string sweep_param_to_string(SweepParam param) {
    switch (param) {
    case SweepParam::skip_count: return "skip_count";
    case SweepParam::loi: return "loi";
    case SweepParam::det: return "det";
    }
    throw std::logic_error("unhandled sweep parameter");
}

SweepResult sweep(const Model &model, const PromptSet &prompts, SweepParam param,
                  std::span<const double> values, const BenchConfig &fixed) {
    if (values.empty()) {
        throw std::invalid_argument("sweep: empty value range");
    }
    SweepResult out;
    out.param = param;
    for (double v : values) {
        BenchConfig c = fixed;
        c.modes = {Mode::clasp};
        c.with_timing = false;
        switch (param) {
        case SweepParam::skip_count: c.draft.opt.max_skip = int(v); break;
        case SweepParam::loi: c.draft.opt_interval = int(v); break;
        case SweepParam::det: c.draft.det = float(v); break;
        }
        BenchReport rep = run_benchmark(model, prompts, c);
        const BenchRow &row = rep.rows.back();
        SweepPoint p;
        p.value = v;
        p.cost_speedup = row.cost_speedup;
        p.tau = row.tau;
        p.acceptance_rate = row.acceptance_rate;
        out.points.push_back(p);
    }
    const auto best = std::max_element(out.points.begin(), out.points.end(),
                                       [](const SweepPoint &a, const SweepPoint &b) {
                                           return a.cost_speedup < b.cost_speedup;
                                       });
    out.best_value = best->value;
    out.best_speedup = best->cost_speedup;
    return out;
}

json sweep_to_json(const SweepResult &result) {
    json j;
    j["schema"] = "clasp-sweep/1";
    j["param"] = sweep_param_to_string(result.param);
    j["points"] = json::array();
    for (const auto &p : result.points) {
        j["points"].push_back({{"value", p.value},
                               {"cost_speedup", p.cost_speedup},
                               {"tau", p.tau},
                               {"acceptance_rate", p.acceptance_rate}});
    }
    j["best_value"] = result.best_value;
    j["best_speedup"] = result.best_speedup;
    return j;
}

PersistenceResult persistence_study(const Model &model, const PromptSet &prompts,
                                    const DraftConfig &cfg, int max_distance, uint64_t seed) {
    if (max_distance < 1) {
        throw std::invalid_argument("persistence_study: max_distance must be >= 1");
    }
    const std::vector<PromptRecord> recs = sorted_records(prompts);

    PersistenceResult out;
    out.max_distance = max_distance;
    std::vector<double> sums(max_distance + 1, 0.0);
    std::vector<int64_t> counts(max_distance + 1, 0);

    for (size_t i = 0; i < recs.size(); ++i) {
        DraftConfig dc = cfg;
        dc.opt_interval = 1;
        dc.max_new_tokens = resolved_max_new(recs[i], cfg);
        Rng rng(child_seed(seed, uint64_t(Mode::clasp), i));
        GenerationResult r = generate(model, recs[i].tokens, dc, Mode::clasp, rng);

        std::vector<const SkipSet *> token_sets;
        token_sets.reserve(r.tokens.size());
        for (const auto &c : r.cycles) {
            for (int t = 0; t < c.emitted; ++t) {
                token_sets.push_back(&c.skip_snapshot);
            }
        }

        const int total = int(token_sets.size());
        double run_at_one = 0.0;
        double run_at_max = 0.0;
        int64_t run_one_n = 0;
        int64_t run_max_n = 0;
        for (int delta = 0; delta <= max_distance; ++delta) {
            for (int t = 0; t + delta < total; ++t) {
                const double jac = jaccard_similarity(*token_sets[t], *token_sets[t + delta]);
                sums[delta] += jac;
                counts[delta] += 1;
                if (delta == 1) {
                    run_at_one += jac;
                    run_one_n += 1;
                } else if (delta == max_distance) {
                    run_at_max += jac;
                    run_max_n += 1;
                }
            }
        }
        if (run_one_n > 0 && run_max_n > 0) {
            PersistenceRun pr;
            pr.prompt_id = recs[i].id;
            pr.at_one = run_at_one / double(run_one_n);
            pr.at_max = run_at_max / double(run_max_n);
            out.per_run.push_back(std::move(pr));
        }
    }

    for (int delta = 0; delta <= max_distance; ++delta) {
        if (counts[delta] > 0) {
            PersistencePoint p;
            p.distance = delta;
            p.mean_jaccard = sums[delta] / double(counts[delta]);
            p.samples = counts[delta];
            out.points.push_back(p);
        }
    }
    return out;
}

json persistence_to_json(const PersistenceResult &result) {
    json j;
    j["schema"] = "clasp-persistence/1";
    j["max_distance"] = result.max_distance;
    j["points"] = json::array();
    for (const auto &p : result.points) {
        j["points"].push_back(
            {{"distance", p.distance}, {"mean_jaccard", p.mean_jaccard}, {"samples", p.samples}});
    }
    j["runs"] = json::array();
    for (const auto &r : result.per_run) {
        j["runs"].push_back({{"prompt", r.prompt_id}, {"at_1", r.at_one}, {"at_max", r.at_max}});
    }
    return j;
}

namespace {

size_t subset_count(int n, int k, size_t cap) {
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

OracleStudyResult oracle_study(const Model &model, const PromptSet &prompts,
                               const LayerOptConfig &cfg, size_t max_evaluations) {
    cfg.validate(model.config);
    const std::vector<PromptRecord> recs = sorted_records(prompts);

    std::vector<int> free_layers;
    for (int l = 0; l < model.config.num_layers; ++l) {
        if (!cfg.pinned(l, model.config)) {
            free_layers.push_back(l);
        }
    }
    const int budget = std::min<int>(cfg.max_skip, int(free_layers.size()));
    const size_t total = subset_count(int(free_layers.size()), budget, max_evaluations);
    if (total > max_evaluations) {
        throw budget_exceeded_error("oracle study over " + std::to_string(free_layers.size()) +
                                    " choose " + std::to_string(budget) + " subsets exceeds " +
                                    std::to_string(max_evaluations) + " evaluations");
    }

    OracleStudyResult out;
    int top5 = 0;
    int beats = 0;
    for (const auto &rec : recs) {
        Session session(model);
        ForwardResult prefill = session.full_forward(rec.tokens);
        session.rollback(int(rec.tokens.size()) - 1);
        const ForwardTrace &trace = prefill.traces.back();

        LayerOptResult dp = optimize_skip_set(session, trace, cfg);
        const double dp_score = score_skip_set(session, trace, dp.skip);

        OracleCase oc;
        oc.prompt_id = rec.id;
        oc.dp_score = dp_score;
        oc.best_score = -2.0;

        if (budget == 0) {
            oc.best_score = dp_score;
            oc.subset_mean = dp_score;
            oc.subsets = 1;
        } else {
            std::vector<int> pick(budget);
            for (int i = 0; i < budget; ++i) {
                pick[i] = i;
            }
            std::vector<int> chosen(budget);
            double sum = 0.0;
            int64_t better = 0;
            int64_t count = 0;
            while (true) {
                for (int i = 0; i < budget; ++i) {
                    chosen[i] = free_layers[pick[i]];
                }
                const double score = score_skip_set(
                    session, trace, SkipSet::from_indices(model.config.num_layers, chosen));
                sum += score;
                count += 1;
                oc.best_score = std::max(oc.best_score, score);
                if (score > dp_score) {
                    better += 1;
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
            oc.subsets = count;
            oc.subset_mean = sum / double(count);
            oc.rank_fraction = double(better) / double(count);
        }

        top5 += oc.rank_fraction <= 0.05 ? 1 : 0;
        beats += oc.dp_score > oc.subset_mean ? 1 : 0;
        out.cases.push_back(std::move(oc));
    }
    out.top5_fraction = double(top5) / double(out.cases.size());
    out.beats_random_fraction = double(beats) / double(out.cases.size());
    return out;
}

json oracle_to_json(const OracleStudyResult &result) {
    json j;
    j["schema"] = "clasp-oracle/1";
    j["cases"] = json::array();
    for (const auto &c : result.cases) {
        j["cases"].push_back({{"prompt", c.prompt_id},
                              {"dp_score", c.dp_score},
                              {"best_score", c.best_score},
                              {"subset_mean", c.subset_mean},
                              {"rank_fraction", c.rank_fraction},
                              {"subsets", c.subsets}});
    }
    j["top5_fraction"] = result.top5_fraction;
    j["beats_random_fraction"] = result.beats_random_fraction;
    return j;
}

} // namespace clasp
