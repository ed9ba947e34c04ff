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
#include <string>
#include <vector>

#include <json.hpp>

#include "clasp/prompts.hpp"
#include "clasp/spec_engine.hpp"

namespace clasp {

// Layer-pass cost model: per cycle the draft stage costs drafted * (L - M),
// the verification pass costs L, and the optimizer amortizes to L / loi
// (pass loi = 0 when no optimizer runs). Speedup is emitted * L over total
// cost, so plain decoding scores exactly 1.
double cost_model_speedup(std::span<const CycleStats> cycles, int num_layers, int skip_count,
                          int loi);

struct BenchRow {
    std::string mode;
    int skip_count = 0;
    int max_draft = 0;
    double det = 0.0;
    int loi = 0;
    double temperature = 0.0;
    int prompts = 0;
    int64_t cycles = 0;
    int64_t total_drafted = 0;
    int64_t total_accepted = 0;
    int64_t total_emitted = 0;
    int optimizer_runs = 0;
    double tau = 0.0;
    double acceptance_rate = 0.0;
    double cost_speedup = 0.0;
    // filled only when timing capture is enabled
    double wall_speedup = 0.0;
    double draft_fraction = 0.0;
    double verify_fraction = 0.0;
    double optimize_fraction = 0.0;
};

struct BenchReport {
    ModelConfig model;
    uint64_t seed = 0;
    int prompt_count = 0;
    int default_max_new_tokens = 0;
    bool with_timing = false;
    std::vector<BenchRow> rows;
};

struct BenchConfig {
    std::vector<Mode> modes{Mode::clasp};  // baseline runs regardless
    DraftConfig draft;
    uint64_t seed = 0;
    bool with_timing = false;  // adds wall_speedup and stage fractions
};

// Runs the autoregressive baseline over every prompt, then each configured
// mode. At temperature zero every speculative mode's output is checked
// against the baseline token-for-token. Deterministic given (model, prompts,
// seed) when timing capture is off.
BenchReport run_benchmark(const Model &model, const PromptSet &prompts, const BenchConfig &cfg);

nlohmann::ordered_json report_to_json(const BenchReport &report);
std::string report_to_csv(const BenchReport &report);
void write_report(const BenchReport &report, const std::string &json_path,
                  const std::string &csv_path);

enum class SweepParam { skip_count, loi, det };

SweepParam sweep_param_from_string(const std::string &name);
std::string sweep_param_to_string(SweepParam param);

struct SweepPoint {
    double value = 0.0;
    double cost_speedup = 0.0;
    double tau = 0.0;
    double acceptance_rate = 0.0;
};

struct SweepResult {
    SweepParam param = SweepParam::skip_count;
    std::vector<SweepPoint> points;
    double best_value = 0.0;
    double best_speedup = 0.0;
};

SweepResult sweep(const Model &model, const PromptSet &prompts, SweepParam param,
                  std::span<const double> values, const BenchConfig &fixed);

nlohmann::ordered_json sweep_to_json(const SweepResult &result);

struct PersistencePoint {
    int distance = 0;
    double mean_jaccard = 0.0;
    int64_t samples = 0;
};

struct PersistenceRun {
    std::string prompt_id;
    double at_one = 0.0;
    double at_max = 0.0;
};

struct PersistenceResult {
    int max_distance = 0;
    std::vector<PersistencePoint> points;  // distance 0..max_distance
    std::vector<PersistenceRun> per_run;   // runs long enough to cover max_distance
};

// Runs clasp with loi forced to 1 so every cycle re-selects its skip set,
// assigns each emitted token its cycle's set, and reports mean Jaccard
// similarity against the set `distance` tokens later.
PersistenceResult persistence_study(const Model &model, const PromptSet &prompts,
                                    const DraftConfig &cfg, int max_distance, uint64_t seed);

nlohmann::ordered_json persistence_to_json(const PersistenceResult &result);

struct OracleCase {
    std::string prompt_id;
    double dp_score = 0.0;
    double best_score = 0.0;
    double subset_mean = 0.0;  // mean over all subsets = uniform-random baseline
    double rank_fraction = 0.0;  // fraction of subsets scoring strictly higher
    int64_t subsets = 0;
};

struct OracleStudyResult {
    std::vector<OracleCase> cases;
    double top5_fraction = 0.0;          // cases with rank_fraction <= 0.05
    double beats_random_fraction = 0.0;  // cases with dp_score > subset_mean
};

// Scores the layer optimizer against exhaustive enumeration on the last
// prompt token of each record.
OracleStudyResult oracle_study(const Model &model, const PromptSet &prompts,
                               const LayerOptConfig &cfg, size_t max_evaluations);

nlohmann::ordered_json oracle_to_json(const OracleStudyResult &result);

} // namespace clasp
