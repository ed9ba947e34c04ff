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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "clasp/bench.hpp"
#include "clasp/errors.hpp"
#include "clasp/model.hpp"
#include "clasp/prompts.hpp"

using namespace clasp;
namespace fs = std::filesystem;

namespace {

Model bench_model(int layers = 6, uint64_t seed = 17) {
    Model m;
    m.config.num_layers = layers;
    m.config.hidden_size = 32;
    m.config.num_heads = 4;
    m.config.ffn_size = 64;
    m.config.vocab_size = 256;
    m.config.max_positions = 128;
    m.weights = init_weights(m.config, seed);
    return m;
}

CycleStats cycle(int drafted, int accepted, int emitted) {
    CycleStats c;
    c.drafted = drafted;
    c.accepted = accepted;
    c.emitted = emitted;
    return c;
}

BenchConfig small_bench_config() {
    BenchConfig cfg;
    cfg.modes = {Mode::clasp, Mode::static_skip, Mode::random_skip};
    cfg.draft.max_new_tokens = 16;
    cfg.draft.max_draft = 4;
    cfg.draft.det = 0.0f;
    cfg.draft.opt.max_skip = 2;
    cfg.seed = 7;
    return cfg;
}

} // namespace

TEST_SUITE("bench") {

TEST_CASE("cost model analytic example") {
    // one cycle: 4 drafts at half the layers, all accepted plus a bonus
    const std::vector<CycleStats> cycles{cycle(4, 4, 5)};
    CHECK(cost_model_speedup(cycles, 32, 16, 0) ==
          doctest::Approx(160.0 / 96.0).epsilon(1e-12));
    // amortized optimizer every 8 cycles adds 32 / 8 = 4 layer passes
    CHECK(cost_model_speedup(cycles, 32, 16, 8) == doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("cost model: drafting with the full stack cannot beat plain decoding") {
    const std::vector<CycleStats> cycles{cycle(3, 3, 4), cycle(2, 0, 1), cycle(4, 2, 3)};
    CHECK(cost_model_speedup(cycles, 16, 0, 0) <= 1.0 + 1e-12);

    // all-accepted cycles at zero skip cost exactly break even
    const std::vector<CycleStats> even{cycle(4, 4, 5), cycle(2, 2, 3)};
    CHECK(cost_model_speedup(even, 16, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cost model validates the skip count") {
    const std::vector<CycleStats> cycles{cycle(1, 1, 2)};
    CHECK_THROWS_AS(cost_model_speedup(cycles, 8, -1, 0), std::invalid_argument);
    CHECK_THROWS_AS(cost_model_speedup(cycles, 8, 9, 0), std::invalid_argument);
    CHECK_NOTHROW(cost_model_speedup(cycles, 8, 8, 0));
}

TEST_CASE("benchmark report: baseline row scores exactly one and rows self-check") {
    const Model model = bench_model();
    const PromptSet prompts = synthetic_prompts(3, 8, 16, 99);
    const BenchConfig cfg = small_bench_config();

    const BenchReport report = run_benchmark(model, prompts, cfg);
    REQUIRE(report.rows.size() == 4); // baseline plus three modes
    CHECK(report.rows[0].mode == "autoregressive");
    CHECK(report.rows[0].cost_speedup == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.rows[0].tau == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.rows[0].skip_count == 0);
    CHECK(report.prompt_count == 3);

    for (const BenchRow &row : report.rows) {
        CHECK(row.prompts == 3);
        CHECK(row.cycles > 0);
        CHECK(row.tau == doctest::Approx(double(row.total_emitted) / double(row.cycles)));
        if (row.total_drafted > 0) {
            CHECK(row.acceptance_rate ==
                  doctest::Approx(double(row.total_accepted) / double(row.total_drafted)));
        }
        CHECK(row.total_emitted == int64_t(3) * cfg.draft.max_new_tokens);
        // timing capture is off
        CHECK(row.wall_speedup == 0.0);
    }

    const BenchRow &clasp_row = report.rows[1];
    CHECK(clasp_row.mode == "clasp");
    CHECK(clasp_row.skip_count == 2);
    CHECK(clasp_row.loi == cfg.draft.opt_interval);
    CHECK(clasp_row.optimizer_runs > 0);
}

TEST_CASE("benchmark json and csv are deterministic and carry the schema") {
    const Model model = bench_model();
    const PromptSet prompts = synthetic_prompts(2, 8, 12, 5);
    const BenchConfig cfg = small_bench_config();

    const BenchReport a = run_benchmark(model, prompts, cfg);
    const BenchReport b = run_benchmark(model, prompts, cfg);
    const std::string ja = report_to_json(a).dump(2);
    const std::string jb = report_to_json(b).dump(2);
    CHECK(ja == jb);
    CHECK(report_to_csv(a) == report_to_csv(b));

    const auto parsed = nlohmann::json::parse(ja);
    CHECK(parsed["schema"] == "clasp-bench-report/1");
    CHECK(parsed["rows"].size() == a.rows.size());
    CHECK_FALSE(parsed["rows"][0].contains("wall_speedup"));

    const std::string csv = report_to_csv(a);
    size_t lines = 0;
    for (char ch : csv) lines += ch == '\n' ? 1 : 0;
    CHECK(lines == a.rows.size() + 1);
    CHECK(csv.rfind("mode,", 0) == 0);
}

TEST_CASE("timing capture adds wall speedup and stage fractions") {
    const Model model = bench_model();
    const PromptSet prompts = synthetic_prompts(2, 8, 12, 6);
    BenchConfig cfg = small_bench_config();
    cfg.modes = {Mode::clasp};
    cfg.with_timing = true;

    const BenchReport report = run_benchmark(model, prompts, cfg);
    const auto j = report_to_json(report);
    CHECK(j["timing"] == true);
    for (const auto &row : j["rows"]) {
        CHECK(row.contains("wall_speedup"));
        const double sum = row["draft_fraction"].get<double>() +
                           row["verify_fraction"].get<double>() +
                           row["optimize_fraction"].get<double>();
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK(report.rows[0].wall_speedup == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.rows[0].verify_fraction == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("write_report produces matching json and csv files") {
    const Model model = bench_model();
    const PromptSet prompts = synthetic_prompts(2, 8, 12, 8);
    BenchConfig cfg = small_bench_config();
    cfg.modes = {Mode::clasp};

    const BenchReport report = run_benchmark(model, prompts, cfg);
    const fs::path json_path = fs::temp_directory_path() / "clasp_test_report.json";
    const fs::path csv_path = fs::temp_directory_path() / "clasp_test_report.csv";
    write_report(report, json_path.string(), csv_path.string());

    std::ifstream jf(json_path);
    const auto parsed = nlohmann::json::parse(jf);
    CHECK(parsed["schema"] == "clasp-bench-report/1");
    std::ifstream cf(csv_path);
    std::string header;
    std::getline(cf, header);
    CHECK(header.rfind("mode,", 0) == 0);
    fs::remove(json_path);
    fs::remove(csv_path);
}

TEST_CASE("sweep evaluates every value and flags the best point") {
    const Model model = bench_model();
    const PromptSet prompts = synthetic_prompts(2, 8, 12, 9);
    BenchConfig cfg = small_bench_config();
    cfg.modes = {Mode::clasp};

    const std::vector<double> values{0.0, 2.0, 4.0};
    const SweepResult result = sweep(model, prompts, SweepParam::skip_count, values, cfg);
    REQUIRE(result.points.size() == 3);
    double best = -1.0;
    for (size_t i = 0; i < values.size(); ++i) {
        CHECK(result.points[i].value == values[i]);
        best = std::max(best, result.points[i].cost_speedup);
    }
    CHECK(result.best_speedup == doctest::Approx(best));
    const auto j = sweep_to_json(result);
    CHECK(j["schema"] == "clasp-sweep/1");
    CHECK(j["param"] == "skip_count");

    CHECK(sweep_param_from_string("det") == SweepParam::det);
    CHECK(sweep_param_to_string(SweepParam::loi) == "loi");
    CHECK_THROWS_AS(sweep_param_from_string("nope"), std::invalid_argument);
}

TEST_CASE("persistence study reports decay points per distance") {
    const Model model = bench_model(8, 21);
    const PromptSet prompts = synthetic_prompts(3, 8, 12, 10);
    DraftConfig cfg;
    cfg.max_new_tokens = 24;
    cfg.det = 0.0f;
    cfg.opt.max_skip = 3;

    const PersistenceResult result = persistence_study(model, prompts, cfg, 8, 3);
    REQUIRE(result.points.size() == 9);
    CHECK(result.max_distance == 8);
    CHECK(result.points[0].distance == 0);
    CHECK(result.points[0].mean_jaccard == doctest::Approx(1.0).epsilon(1e-12));
    for (const PersistencePoint &p : result.points) {
        CHECK(p.samples > 0);
        CHECK(p.mean_jaccard >= 0.0);
        CHECK(p.mean_jaccard <= 1.0);
    }
    REQUIRE(result.per_run.size() == 3);
    for (const PersistenceRun &r : result.per_run) {
        CHECK(r.at_one >= 0.0);
        CHECK(r.at_one <= 1.0);
        CHECK(r.at_max >= 0.0);
        CHECK(r.at_max <= 1.0);
    }
    const auto j = persistence_to_json(result);
    CHECK(j["schema"] == "clasp-persistence/1");
    CHECK(j["points"].size() == 9);
}

TEST_CASE("oracle study bounds the dp against enumeration") {
    const Model model = bench_model(6, 23);
    const PromptSet prompts = synthetic_prompts(3, 10, 14, 11);
    LayerOptConfig cfg;
    cfg.max_skip = 2; // 4 free layers, 6 subsets

    const OracleStudyResult result = oracle_study(model, prompts, cfg, 100);
    REQUIRE(result.cases.size() == 3);
    for (const OracleCase &c : result.cases) {
        CHECK(c.subsets == 6);
        CHECK(c.dp_score <= c.best_score + 1e-9);
        CHECK(c.rank_fraction >= 0.0);
        CHECK(c.rank_fraction <= 1.0);
    }
    CHECK(result.top5_fraction >= 0.0);
    CHECK(result.top5_fraction <= 1.0);
    CHECK(result.beats_random_fraction >= 0.0);
    CHECK(result.beats_random_fraction <= 1.0);

    const auto j = oracle_to_json(result);
    CHECK(j["schema"] == "clasp-oracle/1");
    CHECK(j["cases"].size() == 3);

    CHECK_THROWS_AS(oracle_study(model, prompts, cfg, 5), budget_exceeded_error);
}

TEST_CASE("prompt records round trip through jsonl") {
    PromptSet set;
    PromptRecord text_rec;
    text_rec.id = "a";
    text_rec.text = "hello world";
    text_rec.tokens = encode_bytes(text_rec.text);
    PromptRecord token_rec;
    token_rec.id = "b";
    token_rec.tokens = {1, 2, 3, 250};
    token_rec.max_new_tokens = 9;
    set.records = {text_rec, token_rec};

    const std::string jsonl = serialize_prompts(set);
    const PromptSet parsed = parse_prompts(jsonl, "test");
    CHECK(parsed == set);
}

TEST_CASE("prompt parsing reports the offending line") {
    const std::string dup = R"({"id": "x", "text": "a"}
{"id": "x", "text": "b"})";
    CHECK_THROWS_AS(parse_prompts(dup, "dup"), format_error);
    try {
        parse_prompts(dup, "dup");
    } catch (const format_error &e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_prompts(R"({"id": "x"})", "missing"), format_error);
    CHECK_THROWS_AS(parse_prompts(R"({"id": "x", "text": "a", "tokens": [1]})", "both"),
                    format_error);
    CHECK_THROWS_AS(parse_prompts(R"({"id": "x", "tokens": [999]})", "range"), format_error);
    CHECK_THROWS_AS(parse_prompts("not json", "bad"), format_error);
}

TEST_CASE("byte tokenizer round trip") {
    const std::string text = "drafts skip layers!";
    const std::vector<int> tokens = encode_bytes(text);
    CHECK(tokens.size() == text.size());
    CHECK(decode_bytes(tokens) == text);
    const std::vector<int> bad{256};
    CHECK_THROWS_AS(decode_bytes(bad), std::invalid_argument);
}

TEST_CASE("synthetic prompts are reproducible and printable") {
    const PromptSet a = synthetic_prompts(4, 8, 16, 31);
    const PromptSet b = synthetic_prompts(4, 8, 16, 31);
    CHECK(a == b);
    REQUIRE(a.records.size() == 4);
    CHECK(a.records[0].id == "p0000");
    CHECK(a.records[3].id == "p0003");
    for (const PromptRecord &r : a.records) {
        CHECK(r.tokens.size() >= 8);
        CHECK(r.tokens.size() <= 16);
        for (int t : r.tokens) {
            CHECK(t >= 32);
            CHECK(t < 127);
        }
    }
    const PromptSet c = synthetic_prompts(4, 8, 16, 32);
    CHECK(a.records[0].tokens != c.records[0].tokens);
}

} // TEST_SUITE("bench")
