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

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "clasp/bench.hpp"
#include "clasp/errors.hpp"
#include "clasp/layer_opt.hpp"
#include "clasp/model.hpp"
#include "clasp/prompts.hpp"
#include "clasp/spec_engine.hpp"
#include "clasp/weights_io.hpp"

namespace {

using clasp::Mode;
using json = nlohmann::ordered_json;

struct RunFlags {
    std::string model_path;
    uint64_t seed = 0;
    int skip_layers = 8;
    int draft_len = 8;
    double det = 0.7;
    int loi = 8;
    double temperature = 0.0;
    std::string mode = "clasp";
    std::string prompts_path;
    std::string out_path;
    std::string csv_path;
    std::string text;
    int max_new_tokens = 64;
    int pin_front = 1;
    int pin_back = 1;
    bool timing = false;
    bool sequential = false;
    int synthetic = 0;
    int max_distance = 64;
    uint64_t budget = 200000;
};

void add_model_flag(CLI::App *cmd, RunFlags &f) {
    cmd->add_option("--model", f.model_path, "model weights file")->required();
}

void add_engine_flags(CLI::App *cmd, RunFlags &f) {
    cmd->add_option("--seed", f.seed, "rng seed");
    cmd->add_option("--skip-layers", f.skip_layers, "skip budget M");
    cmd->add_option("--draft-len", f.draft_len, "draft tokens per cycle K");
    cmd->add_option("--det", f.det, "draft-exiting threshold");
    cmd->add_option("--loi", f.loi, "cycles between optimizer runs");
    cmd->add_option("--temperature", f.temperature, "sampling temperature, 0 = greedy");
    cmd->add_option("--max-new-tokens", f.max_new_tokens, "tokens to generate per prompt");
    cmd->add_option("--pin-front", f.pin_front, "leading layers never skipped");
    cmd->add_option("--pin-back", f.pin_back, "trailing layers never skipped");
    cmd->add_flag("--sequential", f.sequential,
                  "evaluate optimizer candidates one by one instead of batched");
}

void add_prompt_flags(CLI::App *cmd, RunFlags &f) {
    cmd->add_option("--prompts", f.prompts_path, "JSONL prompt file");
    cmd->add_option("--synthetic", f.synthetic, "generate this many synthetic prompts instead");
}

clasp::DraftConfig make_draft(const RunFlags &f) {
    clasp::DraftConfig cfg;
    cfg.max_draft = f.draft_len;
    cfg.det = float(f.det);
    cfg.temperature = float(f.temperature);
    cfg.max_new_tokens = f.max_new_tokens;
    cfg.opt_interval = f.loi;
    cfg.opt.max_skip = f.skip_layers;
    cfg.opt.pin_front = f.pin_front;
    cfg.opt.pin_back = f.pin_back;
    cfg.opt.batched = !f.sequential;
    return cfg;
}

std::vector<Mode> parse_modes(const std::string &spec) {
    std::vector<Mode> modes;
    if (spec == "all") {
        return {Mode::clasp, Mode::static_skip, Mode::random_skip};
    }
    std::istringstream in(spec);
    std::string name;
    while (std::getline(in, name, ',')) {
        if (!name.empty()) {
            modes.push_back(clasp::mode_from_string(name));
        }
    }
    if (modes.empty()) {
        throw std::invalid_argument("no mode given");
    }
    return modes;
}

clasp::PromptSet resolve_prompts(const RunFlags &f, int default_count) {
    if (!f.prompts_path.empty()) {
        return clasp::load_prompts(f.prompts_path);
    }
    const int count = f.synthetic > 0 ? f.synthetic : default_count;
    return clasp::synthetic_prompts(count, 16, 48, clasp::Rng::mix(f.seed + 0x70726f6d70ull));
}

void write_json(const json &j, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("failed writing " + path);
    }
}

std::string printable(const std::string &text) {
    std::string out;
    for (unsigned char c : text) {
        out.push_back(c >= 32 && c < 127 ? char(c) : '.');
    }
    return out;
}

int cmd_init_model(const RunFlags &f, int layers, int hidden, int heads, int ffn, int vocab,
                   int max_positions) {
    clasp::ModelConfig config;
    config.num_layers = layers;
    config.hidden_size = hidden;
    config.num_heads = heads;
    config.ffn_size = ffn;
    config.vocab_size = vocab;
    config.max_positions = max_positions;
    config.validate();

    clasp::Model model;
    model.config = config;
    model.weights = clasp::init_weights(config, f.seed);
    clasp::save_model(model, f.model_path);
    std::cout << "wrote " << f.model_path << " (" << clasp::param_count(config)
              << " parameters, seed " << f.seed << ")\n";
    return 0;
}

int cmd_gen(const RunFlags &f) {
    const clasp::Model model = clasp::load_model(f.model_path);
    const clasp::DraftConfig cfg = make_draft(f);
    const Mode mode = clasp::mode_from_string(f.mode);

    std::vector<int> prompt;
    std::string prompt_id = "cli";
    if (!f.text.empty()) {
        prompt = clasp::encode_bytes(f.text);
    } else {
        clasp::PromptSet prompts = resolve_prompts(f, 1);
        prompt = prompts.records.front().tokens;
        prompt_id = prompts.records.front().id;
    }

    clasp::Rng rng(f.seed);
    const clasp::GenerationResult result = clasp::generate(model, prompt, cfg, mode, rng);

    std::cout << "prompt " << prompt_id << " (" << prompt.size() << " tokens), mode "
              << clasp::mode_to_string(mode) << "\n";
    std::cout << "tokens:";
    for (int t : result.tokens) {
        std::cout << ' ' << t;
    }
    std::cout << "\ntext: " << printable(clasp::decode_bytes(result.tokens)) << "\n";
    for (size_t i = 0; i < result.cycles.size(); ++i) {
        const auto &c = result.cycles[i];
        std::cout << "cycle " << i + 1 << ": drafted=" << c.drafted << " accepted=" << c.accepted
                  << " emitted=" << c.emitted << (c.bonus_emitted ? " bonus" : "")
                  << (c.optimized ? " optimized" : "") << " skip=[";
        const auto idx = c.skip_snapshot.indices();
        for (size_t k = 0; k < idx.size(); ++k) {
            std::cout << (k ? "," : "") << idx[k];
        }
        std::cout << "]\n";
    }
    const double tau = double(result.tokens.size()) / double(result.cycles.size());
    std::cout << "cycles " << result.cycles.size() << ", tau " << tau << ", drafted "
              << result.total_drafted << ", accepted " << result.total_accepted
              << ", optimizer runs " << result.optimizer_runs << "\n";

    if (!f.out_path.empty()) {
        json j;
        j["prompt"] = prompt_id;
        j["mode"] = clasp::mode_to_string(mode);
        j["tokens"] = result.tokens;
        j["cycles"] = json::array();
        for (const auto &c : result.cycles) {
            j["cycles"].push_back({{"drafted", c.drafted},
                                   {"accepted", c.accepted},
                                   {"emitted", c.emitted},
                                   {"bonus", c.bonus_emitted},
                                   {"optimized", c.optimized},
                                   {"skip", c.skip_snapshot.indices()}});
        }
        write_json(j, f.out_path);
    }
    return 0;
}

int cmd_bench(const RunFlags &f) {
    const clasp::Model model = clasp::load_model(f.model_path);
    const clasp::PromptSet prompts = resolve_prompts(f, 8);

    clasp::BenchConfig cfg;
    cfg.modes = parse_modes(f.mode);
    cfg.draft = make_draft(f);
    cfg.seed = f.seed;
    cfg.with_timing = f.timing;

    const clasp::BenchReport report = clasp::run_benchmark(model, prompts, cfg);

    std::string csv_path = f.csv_path;
    if (csv_path.empty() && !f.out_path.empty()) {
        csv_path = f.out_path;
        const size_t dot = csv_path.rfind(".json");
        if (dot != std::string::npos && dot == csv_path.size() - 5) {
            csv_path.resize(dot);
        }
        csv_path += ".csv";
    }
    if (!f.out_path.empty()) {
        clasp::write_report(report, f.out_path, csv_path);
    }

    std::cout << clasp::report_to_csv(report);
    if (!f.out_path.empty()) {
        std::cout << "wrote " << f.out_path << " and " << csv_path << "\n";
    }
    return 0;
}

int cmd_sweep(const RunFlags &f, const std::string &param_name, std::vector<double> values) {
    const clasp::Model model = clasp::load_model(f.model_path);
    const clasp::PromptSet prompts = resolve_prompts(f, 8);
    const clasp::SweepParam param = clasp::sweep_param_from_string(param_name);
    if (values.empty()) {
        throw std::invalid_argument("sweep needs --values");
    }

    clasp::BenchConfig cfg;
    cfg.draft = make_draft(f);
    cfg.seed = f.seed;

    const clasp::SweepResult result = clasp::sweep(model, prompts, param, values, cfg);
    std::cout << param_name << ",cost_speedup,tau,acceptance_rate\n";
    for (const auto &p : result.points) {
        std::cout << p.value << ',' << p.cost_speedup << ',' << p.tau << ',' << p.acceptance_rate
                  << "\n";
    }
    std::cout << "best " << param_name << " = " << result.best_value << " (cost speedup "
              << result.best_speedup << ")\n";
    if (!f.out_path.empty()) {
        write_json(clasp::sweep_to_json(result), f.out_path);
    }
    return 0;
}

int cmd_persistence(const RunFlags &f) {
    const clasp::Model model = clasp::load_model(f.model_path);
    const clasp::PromptSet prompts = resolve_prompts(f, 10);
    const clasp::DraftConfig cfg = make_draft(f);

    const clasp::PersistenceResult result =
        clasp::persistence_study(model, prompts, cfg, f.max_distance, f.seed);
    std::cout << "distance,mean_jaccard,samples\n";
    for (const auto &p : result.points) {
        std::cout << p.distance << ',' << p.mean_jaccard << ',' << p.samples << "\n";
    }
    if (!f.out_path.empty()) {
        write_json(clasp::persistence_to_json(result), f.out_path);
    }
    return 0;
}

int cmd_oracle(const RunFlags &f) {
    const clasp::Model model = clasp::load_model(f.model_path);
    const clasp::PromptSet prompts = resolve_prompts(f, 100);

    clasp::LayerOptConfig cfg;
    cfg.max_skip = f.skip_layers;
    cfg.pin_front = f.pin_front;
    cfg.pin_back = f.pin_back;
    cfg.batched = !f.sequential;

    const clasp::OracleStudyResult result =
        clasp::oracle_study(model, prompts, cfg, size_t(f.budget));
    std::cout << "contexts " << result.cases.size() << ", top-5% rank fraction "
              << result.top5_fraction << ", beats random mean " << result.beats_random_fraction
              << "\n";
    if (!f.out_path.empty()) {
        write_json(clasp::oracle_to_json(result), f.out_path);
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"layer-skipping self-speculative decoding on a desk-scale transformer"};
    app.require_subcommand(1);

    RunFlags f;
    int layers = 16;
    int hidden = 128;
    int heads = 4;
    int ffn = 512;
    int vocab = 256;
    int max_positions = 1024;
    std::string sweep_param;
    std::vector<double> sweep_values;

    CLI::App *init = app.add_subcommand("init-model", "write a seeded weights file");
    add_model_flag(init, f);
    init->add_option("--seed", f.seed, "rng seed");
    init->add_option("--layers", layers, "decoder layers");
    init->add_option("--hidden", hidden, "hidden size");
    init->add_option("--heads", heads, "attention heads");
    init->add_option("--ffn", ffn, "feed-forward size");
    init->add_option("--vocab", vocab, "vocabulary size");
    init->add_option("--max-positions", max_positions, "context limit");

    CLI::App *gen = app.add_subcommand("gen", "generate from one prompt");
    add_model_flag(gen, f);
    add_engine_flags(gen, f);
    add_prompt_flags(gen, f);
    gen->add_option("--mode", f.mode, "autoregressive | clasp | static_skip | random_skip");
    gen->add_option("--text", f.text, "prompt text (byte tokens)");
    gen->add_option("--out", f.out_path, "write generation JSON here");

    CLI::App *bench = app.add_subcommand("bench", "benchmark modes against the baseline");
    add_model_flag(bench, f);
    add_engine_flags(bench, f);
    add_prompt_flags(bench, f);
    bench->add_option("--mode", f.mode, "comma-separated modes, or `all`");
    bench->add_option("--out", f.out_path, "write report JSON here");
    bench->add_option("--csv", f.csv_path, "write report CSV here (default: next to --out)");
    bench->add_flag("--timing", f.timing, "add wall-clock speedup and stage fractions");

    CLI::App *sweep = app.add_subcommand("sweep", "sweep one parameter, report the curve");
    add_model_flag(sweep, f);
    add_engine_flags(sweep, f);
    add_prompt_flags(sweep, f);
    sweep->add_option("--param", sweep_param, "skip_count | loi | det")->required();
    sweep->add_option("--values", sweep_values, "values to sweep")->delimiter(',');
    sweep->add_option("--out", f.out_path, "write sweep JSON here");

    CLI::App *persistence =
        app.add_subcommand("persistence", "skip-set similarity vs token distance (loi = 1)");
    add_model_flag(persistence, f);
    add_engine_flags(persistence, f);
    add_prompt_flags(persistence, f);
    persistence->add_option("--max-distance", f.max_distance, "largest token distance");
    persistence->add_option("--out", f.out_path, "write study JSON here");

    CLI::App *oracle =
        app.add_subcommand("oracle", "layer optimizer vs exhaustive subset search");
    add_model_flag(oracle, f);
    add_engine_flags(oracle, f);
    add_prompt_flags(oracle, f);
    oracle->add_option("--budget", f.budget, "max subsets to enumerate per context");
    oracle->add_option("--out", f.out_path, "write study JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (init->parsed()) {
            return cmd_init_model(f, layers, hidden, heads, ffn, vocab, max_positions);
        }
        if (gen->parsed()) {
            return cmd_gen(f);
        }
        if (bench->parsed()) {
            return cmd_bench(f);
        }
        if (sweep->parsed()) {
            return cmd_sweep(f, sweep_param, sweep_values);
        }
        if (persistence->parsed()) {
            return cmd_persistence(f);
        }
        if (oracle->parsed()) {
            return cmd_oracle(f);
        }
        std::cerr << "no subcommand\n";
        return 1;
    } catch (const std::invalid_argument &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
