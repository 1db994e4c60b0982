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

// selcl command line: gen, train, eval, sweep, dump-proj.

#include <deque>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "selcl/harness.hpp"
#include "selcl/io_util.hpp"

namespace {

using namespace selcl;

enum class Kind { kDouble, kInt, kUint, kString };

struct Override {
  std::string key;
  Kind kind;
  std::string raw;
};

// Flag overrides are collected as strings and merged into the flat config
// JSON, so they go through the same validation as a config file.
class Overrides {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& key, Kind kind, const std::string& help) {
    items_.push_back(Override{key, kind, {}});
    app->add_option(flag, items_.back().raw, help);
  }

  void apply(nlohmann::json& j) const {
    for (const auto& o : items_) {
      if (o.raw.empty()) continue;
      switch (o.kind) {
        case Kind::kDouble: {
          const auto v = parse_double(o.raw);
          if (!v) throw ConfigError(o.key + ": '" + o.raw + "' is not a number");
          j[o.key] = *v;
          break;
        }
        case Kind::kInt: {
          const auto v = parse_int(o.raw);
          if (!v) throw ConfigError(o.key + ": '" + o.raw + "' is not an integer");
          j[o.key] = *v;
          break;
        }
        case Kind::kUint: {
          const auto v = parse_int(o.raw);
          if (!v || *v < 0) throw ConfigError(o.key + ": '" + o.raw + "' is not a non-negative integer");
          j[o.key] = static_cast<std::uint64_t>(*v);
          break;
        }
        case Kind::kString:
          j[o.key] = o.raw;
          break;
      }
    }
  }

 private:
  std::deque<Override> items_;
};

struct Common {
  std::string config_path;
  std::string seed;
  Overrides overrides;
};

void add_run_flags(CLI::App* app, Common& c) {
  auto& o = c.overrides;
  o.add(app, "--alpha", "alpha", Kind::kDouble, "confident-example fractile");
  o.add(app, "--beta", "beta", Kind::kDouble, "confident-pair fractile");
  o.add(app, "--k", "k", Kind::kInt, "neighbors for pseudo-labels");
  o.add(app, "--posterior-source", "posterior_source", Kind::kString, "pseudo|noisy");
  o.add(app, "--alpha-m", "alpha_m", Kind::kDouble, "mixup Beta parameter");
  o.add(app, "--tau", "tau", Kind::kDouble, "contrastive temperature");
  o.add(app, "--lambda-c", "lambda_c", Kind::kDouble, "classification loss weight");
  o.add(app, "--lambda-s", "lambda_s", Kind::kDouble, "similarity loss weight");
  o.add(app, "--k-eval", "k_eval", Kind::kInt, "neighbors for KNN evaluation");
  o.add(app, "--knn-labels", "knn_labels", Kind::kString, "noisy|pseudo");
  o.add(app, "--warmup-epochs", "warmup_epochs", Kind::kInt, "warm-up epochs");
  o.add(app, "--epochs", "max_epochs", Kind::kInt, "total pre-training epochs");
  o.add(app, "--finetune-epochs", "finetune_epochs", Kind::kInt, "fine-tuning epochs");
  o.add(app, "--batch-size", "batch_size", Kind::kInt, "examples per batch");
  o.add(app, "--lr", "lr", Kind::kDouble, "learning rate");
  o.add(app, "--momentum", "momentum", Kind::kDouble, "SGD momentum");
  o.add(app, "--weight-decay", "weight_decay", Kind::kDouble, "weight decay");
  o.add(app, "--warmup-kind", "warmup_kind", Kind::kString, "unsupervised|supervised");
  o.add(app, "--hidden-dim", "hidden_dim", Kind::kInt, "encoder width");
  o.add(app, "--proj-dim", "proj_dim", Kind::kInt, "projection width");
  o.add(app, "--projection", "projection", Kind::kString, "linear|mlp");
}

void add_data_flags(CLI::App* app, Common& c) {
  auto& o = c.overrides;
  o.add(app, "--n", "n", Kind::kInt, "number of examples");
  o.add(app, "--classes", "classes", Kind::kInt, "number of classes");
  o.add(app, "--dim", "dim", Kind::kInt, "feature dimension");
  o.add(app, "--spread", "spread", Kind::kDouble, "cluster standard deviation");
  o.add(app, "--noise-kind", "noise_kind", Kind::kString, "symmetric|asymmetric");
  o.add(app, "--noise-rate", "noise_rate", Kind::kDouble, "label noise rate");
  o.add(app, "--data-seed", "data_seed", Kind::kUint, "seed for the features");
  o.add(app, "--noise-seed", "noise_seed", Kind::kUint, "seed for the label noise");
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON config file (flat keys)");
  app->add_option("--seed", c.seed, "sets the run, data and noise seeds");
  add_data_flags(app, c);
}

ConfigFile resolve_config(const Common& c) {
  ConfigFile base = c.config_path.empty() ? ConfigFile{} : load_config(c.config_path);
  nlohmann::json j = to_json(base);
  if (!c.seed.empty()) {
    const auto s = parse_int(c.seed);
    if (!s || *s < 0) throw ConfigError("seed: '" + c.seed + "' is not a non-negative integer");
    const auto u = static_cast<std::uint64_t>(*s);
    j["seed"] = u;
    j["data_seed"] = u;
    j["noise_seed"] = u;
  }
  c.overrides.apply(j);
  return parse_config(j);
}

Dataset resolve_data(const std::string& data_path, const ConfigFile& cfg) {
  if (data_path.empty()) return cfg.data.build();
  return load_features_csv(data_path);
}

void print_report(const nlohmann::json& report, const std::string& path) {
  if (path.empty()) {
    std::cout << report.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << report.dump(2) << '\n';
}

RunSummary summarize_checkpoint(const Dataset& ds, const ConfigFile& cfg, const NetworkParams& params) {
  const Trainer t(ds, cfg.run, params);
  RunSummary s;
  s.pretrained = params;
  s.selection = t.select();
  const TrainingView& v = t.view();
  s.precision = selection_precision(s.selection.confident_all, s.selection.g, v.true_train, v.noisy_train);
  if (v.x_test.rows() > 0) {
    const Matrix z_train = embed(params, v.x_train).z;
    const Matrix z_test = embed(params, v.x_test).z;
    const int k_eval = std::min(cfg.run.k_eval, static_cast<int>(z_train.rows()));
    s.knn_acc = weighted_knn_eval(z_train, v.noisy_train, z_test, v.true_test, v.num_classes, k_eval, cfg.run.tau_knn);
  } else {
    s.knn_acc = std::numeric_limits<double>::quiet_NaN();
  }
  s.pretrain_test_acc = classifier_accuracy(params, v.x_test, v.true_test);
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto f : split_csv_line(s)) {
    const auto t = trim(f);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"selective-supervised contrastive learning on noisy vector data"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  // gen
  Common gen;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "generate a noisy blob dataset as CSV");
  add_common(gen_cmd, gen);
  gen_cmd->add_option("--out", gen_out, "output CSV")->required();

  // train
  Common train;
  std::string train_data, train_metrics, train_out_dir, train_checkpoint;
  bool train_finetune = false;
  int checkpoint_every = 0;
  auto* train_cmd = app.add_subcommand("train", "pre-train, optionally followed by fine-tuning");
  add_common(train_cmd, train);
  add_run_flags(train_cmd, train);
  train_cmd->add_option("--data", train_data, "dataset CSV (default: generate from config)");
  train_cmd->add_option("--metrics", train_metrics, "per-epoch metrics CSV");
  train_cmd->add_option("--out-dir", train_out_dir, "run directory for config, metrics, report, checkpoints");
  train_cmd->add_option("--checkpoint", train_checkpoint, "final network checkpoint");
  train_cmd->add_option("--checkpoint-every", checkpoint_every, "checkpoint period in epochs (needs --out-dir)")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_flag("--finetune", train_finetune, "fine-tune a classifier on the confident examples");

  // eval
  Common eval;
  std::string eval_data, eval_checkpoint, eval_report;
  auto* eval_cmd = app.add_subcommand("eval", "metrics of a checkpoint");
  add_common(eval_cmd, eval);
  add_run_flags(eval_cmd, eval);
  eval_cmd->add_option("--data", eval_data, "dataset CSV (default: generate from config)");
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "network checkpoint")->required();
  eval_cmd->add_option("--report", eval_report, "report JSON (default: stdout)");

  // sweep
  Common sweep;
  std::string sweep_axis, sweep_values, sweep_seeds, sweep_out, sweep_out_dir;
  bool sweep_no_finetune = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "sensitivity sweep over one hyperparameter");
  add_common(sweep_cmd, sweep);
  add_run_flags(sweep_cmd, sweep);
  sweep_cmd->add_option("--axis", sweep_axis, "lambda_s|alpha|beta|noise_rate|warmup_kind")->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();
  sweep_cmd->add_option("--seeds", sweep_seeds, "comma-separated replicate seeds (default 1,2,3)");
  sweep_cmd->add_option("--out", sweep_out, "summary CSV")->required();
  sweep_cmd->add_option("--out-dir", sweep_out_dir, "directory for per-run outputs");
  sweep_cmd->add_flag("--no-finetune", sweep_no_finetune, "score the pre-trained classifier instead");

  // dump-proj
  Common proj;
  std::string proj_data, proj_checkpoint, proj_out;
  auto* proj_cmd = app.add_subcommand("dump-proj", "2-D PCA coordinates of the train embeddings");
  add_common(proj_cmd, proj);
  add_run_flags(proj_cmd, proj);
  proj_cmd->add_option("--data", proj_data, "dataset CSV (default: generate from config)");
  proj_cmd->add_option("--checkpoint", proj_checkpoint, "network checkpoint")->required();
  proj_cmd->add_option("--out", proj_out, "projection CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*gen_cmd) {
      const ConfigFile cfg = resolve_config(gen);
      dump_features_csv(cfg.data.build(), gen_out);
      return 0;
    }

    if (*train_cmd) {
      const ConfigFile cfg = resolve_config(train);
      const Dataset ds = resolve_data(train_data, cfg);
      if (checkpoint_every > 0 && train_out_dir.empty()) throw ConfigError("--checkpoint-every needs --out-dir");
      if (!train_out_dir.empty()) std::filesystem::create_directories(train_out_dir);
      EpochHook hook;
      if (checkpoint_every > 0) {
        hook = [&](const Trainer& t, const EpochRecord& r) {
          if (r.epoch % checkpoint_every == 0) {
            save_checkpoint(t.params(), std::filesystem::path(train_out_dir) /
                                            ("checkpoint_epoch" + std::to_string(r.epoch) + ".json"));
          }
        };
      }
      const RunSummary s = run_experiment(ds, cfg.run, train_finetune, hook);
      if (!train_metrics.empty()) write_metrics_csv(s.history, train_metrics);
      const NetworkParams& final_params = s.finetuned ? *s.finetuned : s.pretrained;
      if (!train_checkpoint.empty()) save_checkpoint(final_params, train_checkpoint);
      if (!train_out_dir.empty()) {
        write_run_directory(train_out_dir, cfg, s);
        save_checkpoint(final_params, std::filesystem::path(train_out_dir) / "checkpoint.json");
      }
      std::cout << "epochs=" << s.history.size() << " n_T=" << s.selection.confident_all.size()
                << " prec_T=" << format_fixed(s.precision.examples, 2) << " prec_G=" << format_fixed(s.precision.pairs, 2)
                << " knn_acc=" << format_fixed(s.knn_acc, 2) << " test_acc=" << format_fixed(s.pretrain_test_acc, 2);
      if (s.finetune_test_acc) std::cout << " finetune_test_acc=" << format_fixed(*s.finetune_test_acc, 2);
      std::cout << '\n';
      return 0;
    }

    if (*eval_cmd) {
      const ConfigFile cfg = resolve_config(eval);
      const Dataset ds = resolve_data(eval_data, cfg);
      print_report(make_report(summarize_checkpoint(ds, cfg, load_checkpoint(eval_checkpoint)), cfg), eval_report);
      return 0;
    }

    if (*sweep_cmd) {
      ExperimentPlan plan;
      plan.base = resolve_config(sweep);
      plan.axis = parse_axis(sweep_axis);
      plan.values = split_list(sweep_values);
      plan.finetune = !sweep_no_finetune;
      if (!sweep_seeds.empty()) {
        plan.seeds.clear();
        for (const auto& s : split_list(sweep_seeds)) {
          const auto v = parse_int(s);
          if (!v || *v < 0) throw ConfigError("seeds: '" + s + "' is not a non-negative integer");
          plan.seeds.push_back(static_cast<std::uint64_t>(*v));
        }
      }
      plan.validate();
      std::optional<std::filesystem::path> dir;
      if (!sweep_out_dir.empty()) dir = sweep_out_dir;
      const auto outcomes = run_plan(plan, dir, [&](const RunOutcome& o) {
        spdlog::info("{}={} seed {}: {}", sweep_axis, o.value, o.seed,
                     o.test_acc ? format_fixed(*o.test_acc, 2) : "failed: " + o.error);
      });
      const bool complete = emit_summary(summarize(plan, outcomes), sweep_out);
      if (!complete) {
        std::cerr << "sweep incomplete; missing cells written as NA\n";
        return 2;
      }
      return 0;
    }

    if (*proj_cmd) {
      const ConfigFile cfg = resolve_config(proj);
      const Dataset ds = resolve_data(proj_data, cfg);
      const NetworkParams params = load_checkpoint(proj_checkpoint);
      const Trainer t(ds, cfg.run, params);
      const SelectionState sel = t.select();
      std::vector<char> in_t(t.view().train_index.size(), 0);
      for (int i : sel.confident_all) in_t[static_cast<std::size_t>(i)] = 1;
      dump_projection_2d(embed(params, t.view().x_train).z, t.view().true_train, t.view().noisy_train, in_t, proj_out);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
