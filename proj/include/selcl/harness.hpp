/*
 * Copyright 2026 The selcl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "selcl/config.hpp"
#include "selcl/trainer.hpp"

namespace selcl {

inline constexpr int kReportSchemaVersion = 1;

enum class SweepAxis : std::uint8_t { kLambdaS, kAlpha, kBeta, kNoiseRate, kWarmupKind };

/// Accepts lambda_s, alpha, beta, noise_rate, warmup_kind.
SweepAxis parse_axis(std::string_view name);
const char* axis_name(SweepAxis axis);

/// Sets `axis` to `value` (a number, or a warm-up kind name) and validates
/// the result. Throws ConfigError on a bad or out-of-domain value.
void apply_axis(ConfigFile& cfg, SweepAxis axis, const std::string& value);

struct ExperimentPlan {
  ConfigFile base;
  SweepAxis axis = SweepAxis::kLambdaS;
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool finetune = true;

  /// Throws ConfigError if any value is out of domain or a list is empty.
  void validate() const;

  /// Base config with one sweep value and one replicate seed applied. The
  /// seed drives data generation, noise and training.
  ConfigFile run_config(std::size_t value_index, std::uint64_t seed) const;
};

struct RunOutcome {
  std::string value;
  std::uint64_t seed = 0;
  std::optional<double> test_acc;  // empty when the run failed
  double prec_t = 0.0;
  std::string error;
};

/// Final metrics of one run as a JSON report.
nlohmann::json make_report(const RunSummary& summary, const ConfigFile& cfg);

/// Writes config.json (as run), metrics.csv and report.json into `dir`.
void write_run_directory(const std::filesystem::path& dir, const ConfigFile& cfg, const RunSummary& summary);

using ProgressFn = std::function<void(const RunOutcome&)>;

/// Runs every (value, seed) combination in order. Failures are recorded in
/// the outcome rather than thrown. With `out_dir`, each run gets its own
/// subdirectory.
std::vector<RunOutcome> run_plan(const ExperimentPlan& plan, const std::optional<std::filesystem::path>& out_dir = {},
                                 const ProgressFn& progress = {});

struct SummaryRow {
  std::string value;
  std::optional<double> mean_test_acc;
  std::optional<double> std_test_acc;
  std::optional<double> mean_prec_t;
  std::size_t n_runs = 0;
  std::size_t n_expected = 0;

  bool complete() const { return n_runs == n_expected; }
};

/// One row per sweep value in plan order. Aggregation does not depend on
/// the order of `outcomes`. The std-dev is the sample deviation, 0 for a
/// single run.
std::vector<SummaryRow> summarize(const ExperimentPlan& plan, const std::vector<RunOutcome>& outcomes);

/// Writes `value,mean_test_acc,std_test_acc,mean_prec_T,n_runs`; cells of
/// incomplete rows are written as NA. Returns false if any row is incomplete.
bool emit_summary(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);

}  // namespace selcl
