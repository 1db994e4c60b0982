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

#include "selcl/harness.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include <spdlog/spdlog.h>

#include "selcl/io_util.hpp"

namespace selcl {

namespace {

constexpr std::pair<SweepAxis, const char*> kAxisNames[] = {{SweepAxis::kLambdaS, "lambda_s"},
                                                            {SweepAxis::kAlpha, "alpha"},
                                                            {SweepAxis::kBeta, "beta"},
                                                            {SweepAxis::kNoiseRate, "noise_rate"},
                                                            {SweepAxis::kWarmupKind, "warmup_kind"}};

double number_or_throw(const std::string& value, SweepAxis axis) {
  const auto v = parse_double(trim(value));
  if (!v || !std::isfinite(*v)) {
    throw ConfigError(std::string("sweep value '") + value + "' is not a number for axis " + axis_name(axis));
  }
  return *v;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

SweepAxis parse_axis(std::string_view name) {
  for (const auto& [axis, n] : kAxisNames) {
    if (name == n) return axis;
  }
  throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
}

const char* axis_name(SweepAxis axis) {
  for (const auto& [a, n] : kAxisNames) {
    if (a == axis) return n;
  }
  return "?";
}

void apply_axis(ConfigFile& cfg, SweepAxis axis, const std::string& value) {
  switch (axis) {
    case SweepAxis::kLambdaS:
      cfg.run.lambda_s = number_or_throw(value, axis);
      break;
    case SweepAxis::kAlpha:
      cfg.run.alpha = number_or_throw(value, axis);
      break;
    case SweepAxis::kBeta:
      cfg.run.beta = number_or_throw(value, axis);
      break;
    case SweepAxis::kNoiseRate:
      cfg.data.noise_rate = number_or_throw(value, axis);
      break;
    case SweepAxis::kWarmupKind:
      apply_json(cfg.run, nlohmann::json{{"warmup_kind", std::string(trim(value))}});
      break;
  }
  cfg.run.validate();
  cfg.data.validate();
}

void ExperimentPlan::validate() const {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (seeds.empty()) throw ConfigError("sweep needs at least one replicate seed");
  for (const auto& v : values) {
    ConfigFile probe = base;
    apply_axis(probe, axis, v);
  }
}

ConfigFile ExperimentPlan::run_config(std::size_t value_index, std::uint64_t seed) const {
  ConfigFile cfg = base;
  apply_axis(cfg, axis, values.at(value_index));
  cfg.run.seed = seed;
  cfg.data.data_seed = seed;
  cfg.data.noise_seed = seed;
  return cfg;
}

nlohmann::json make_report(const RunSummary& summary, const ConfigFile& cfg) {
  nlohmann::json r;
  r["schema_version"] = kReportSchemaVersion;
  r["epochs"] = summary.history.size();
  r["knn_accuracy"] = finite_or_null(summary.knn_acc);
  r["test_accuracy"] = finite_or_null(summary.pretrain_test_acc);
  r["finetune_test_accuracy"] =
      summary.finetune_test_acc ? finite_or_null(*summary.finetune_test_acc) : nlohmann::json(nullptr);
  const SelectionPrecision& p = summary.precision;
  r["precision_examples"] = p.examples;
  r["precision_pairs"] = p.pairs;
  r["precision_examples_empty"] = p.examples_empty;
  r["precision_pairs_empty"] = p.pairs_empty;
  r["n_T"] = summary.selection.confident_all.size();
  r["n_Gp"] = summary.selection.g_prime.size();
  r["n_Gpp"] = summary.selection.g_doubleprime.size();
  r["n_G"] = summary.selection.g.size();
  r["gamma"] = finite_or_null(summary.selection.gamma);
  r["config"] = to_json(cfg);
  return r;
}

void write_run_directory(const std::filesystem::path& dir, const ConfigFile& cfg, const RunSummary& summary) {
  std::filesystem::create_directories(dir);
  save_config(cfg, dir / "config.json");
  write_metrics_csv(summary.history, dir / "metrics.csv");
  std::ofstream out(dir / "report.json");
  if (!out) throw Error("cannot write " + (dir / "report.json").string());
  out << make_report(summary, cfg).dump(2) << '\n';
}

std::vector<RunOutcome> run_plan(const ExperimentPlan& plan, const std::optional<std::filesystem::path>& out_dir,
                                 const ProgressFn& progress) {
  plan.validate();
  std::vector<RunOutcome> outcomes;
  for (std::size_t v = 0; v < plan.values.size(); ++v) {
    for (std::uint64_t seed : plan.seeds) {
      RunOutcome o;
      o.value = plan.values[v];
      o.seed = seed;
      try {
        const ConfigFile cfg = plan.run_config(v, seed);
        const RunSummary s = run_experiment(cfg.data.build(), cfg.run, plan.finetune);
        o.test_acc = plan.finetune ? s.finetune_test_acc : std::optional<double>(s.pretrain_test_acc);
        o.prec_t = s.precision.examples;
        if (out_dir) {
          write_run_directory(*out_dir / (std::string(axis_name(plan.axis)) + "_" + o.value + "_seed" +
                                          std::to_string(seed)),
                              cfg, s);
        }
      } catch (const std::exception& e) {
        o.test_acc.reset();
        o.error = e.what();
        spdlog::error("sweep run {}={} seed {} failed: {}", axis_name(plan.axis), o.value, seed, e.what());
      }
      if (progress) progress(o);
      outcomes.push_back(std::move(o));
    }
  }
  return outcomes;
}

std::vector<SummaryRow> summarize(const ExperimentPlan& plan, const std::vector<RunOutcome>& outcomes) {
  // Keyed by (value, seed) so that input order cannot matter.
  std::map<std::string, std::map<std::uint64_t, const RunOutcome*>> by_value;
  for (const auto& o : outcomes) {
    if (o.test_acc) by_value[o.value][o.seed] = &o;
  }
  std::vector<SummaryRow> rows;
  for (const auto& value : plan.values) {
    SummaryRow row;
    row.value = value;
    row.n_expected = plan.seeds.size();
    std::vector<double> acc, prec;
    for (std::uint64_t seed : plan.seeds) {
      const auto it = by_value.find(value);
      if (it == by_value.end()) continue;
      const auto jt = it->second.find(seed);
      if (jt == it->second.end()) continue;
      acc.push_back(*jt->second->test_acc);
      prec.push_back(jt->second->prec_t);
    }
    row.n_runs = acc.size();
    if (!acc.empty()) {
      double sum = 0.0, psum = 0.0;
      for (std::size_t i = 0; i < acc.size(); ++i) {
        sum += acc[i];
        psum += prec[i];
      }
      const double mean = sum / static_cast<double>(acc.size());
      double ss = 0.0;
      for (double a : acc) ss += (a - mean) * (a - mean);
      row.mean_test_acc = mean;
      row.std_test_acc = acc.size() > 1 ? std::sqrt(ss / static_cast<double>(acc.size() - 1)) : 0.0;
      row.mean_prec_t = psum / static_cast<double>(prec.size());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

bool emit_summary(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "value,mean_test_acc,std_test_acc,mean_prec_T,n_runs\n";
  bool complete = true;
  for (const auto& r : rows) {
    if (r.complete()) {
      out << r.value << ',' << cell(r.mean_test_acc) << ',' << cell(r.std_test_acc) << ',' << cell(r.mean_prec_t);
    } else {
      complete = false;
      out << r.value << ",NA,NA,NA";
    }
    out << ',' << r.n_runs << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
  return complete;
}

}  // namespace selcl
