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

#include "selcl/config.hpp"

#include <fstream>

namespace selcl {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

template <typename Enum>
struct EnumName {
  Enum value;
  const char* name;
};

template <typename Enum, std::size_t N>
void read_enum(const json& j, const char* key, Enum& out, const EnumName<Enum> (&names)[N]) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_string()) throw ConfigError(std::string("config key '") + key + "' must be a string");
  const auto s = j.at(key).get<std::string>();
  for (const auto& n : names) {
    if (s == n.name) {
      out = n.value;
      return;
    }
  }
  throw ConfigError(std::string("config key '") + key + "' has unknown value '" + s + "'");
}

template <typename Enum, std::size_t N>
const char* enum_name(Enum v, const EnumName<Enum> (&names)[N]) {
  for (const auto& n : names) {
    if (n.value == v) return n.name;
  }
  return "?";
}

constexpr EnumName<PosteriorSource> kPosteriorNames[] = {{PosteriorSource::kPseudoLabels, "pseudo"},
                                                         {PosteriorSource::kNoisyLabels, "noisy"}};
constexpr EnumName<KnnLabelSource> kKnnNames[] = {{KnnLabelSource::kNoisy, "noisy"}, {KnnLabelSource::kPseudo, "pseudo"}};
constexpr EnumName<WarmupKind> kWarmupNames[] = {{WarmupKind::kUnsupervised, "unsupervised"},
                                                 {WarmupKind::kSupervised, "supervised"}};
constexpr EnumName<ProjectionKind> kProjectionNames[] = {{ProjectionKind::kLinear, "linear"},
                                                         {ProjectionKind::kMlp, "mlp"}};
constexpr EnumName<NoiseKind> kNoiseNames[] = {{NoiseKind::kSymmetric, "symmetric"},
                                               {NoiseKind::kAsymmetric, "asymmetric"}};

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ConfigError(std::string(field) + " " + what);
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

AugmentationSpec RunConfig::strong_augmentation() const {
  return AugmentationSpec{aug_jitter, aug_drop, aug_scale_lo, aug_scale_hi};
}

AugmentationSpec RunConfig::weak_augmentation() const { return AugmentationSpec{weak_jitter, 0.0, 1.0, 1.0}; }

Architecture RunConfig::architecture(int input_dim, int num_classes) const {
  return Architecture{input_dim, hidden_dim, proj_dim, num_classes, projection};
}

void RunConfig::validate() const {
  require(in_unit(alpha), "alpha", "must lie in [0, 1]");
  require(in_unit(beta), "beta", "must lie in [0, 1]");
  require(k >= 1, "k", "must be at least 1");
  require(alpha_m > 0.0, "alpha_m", "must be positive");
  require(tau > 0.0, "tau", "must be positive");
  require(lambda_c >= 0.0, "lambda_c", "must be nonnegative");
  require(lambda_s >= 0.0, "lambda_s", "must be nonnegative");
  require(k_eval >= 1, "k_eval", "must be at least 1");
  require(tau_knn > 0.0, "tau_knn", "must be positive");
  require(warmup_epochs >= 1, "warmup_epochs", "must be at least 1");
  require(max_epochs >= warmup_epochs, "max_epochs", "must be at least warmup_epochs");
  require(finetune_epochs >= 0, "finetune_epochs", "must be nonnegative");
  require(batch_size >= 2, "batch_size", "must be at least 2");
  require(lr >= 0.0, "lr", "must be nonnegative");
  for (const auto& m : lr_schedule) require(m.epoch >= 0 && m.factor > 0.0, "lr_schedule", "entries need epoch >= 0 and factor > 0");
  require(momentum >= 0.0 && momentum < 1.0, "momentum", "must lie in [0, 1)");
  require(weight_decay >= 0.0, "weight_decay", "must be nonnegative");
  require(finetune_lr >= 0.0, "finetune_lr", "must be nonnegative");
  require(finetune_encoder_scale >= 0.0, "finetune_encoder_scale", "must be nonnegative");
  require(hidden_dim >= 1, "hidden_dim", "must be positive");
  require(proj_dim >= 1, "proj_dim", "must be positive");
  require(aug_jitter >= 0.0, "aug_jitter", "must be nonnegative");
  require(aug_drop >= 0.0 && aug_drop < 1.0, "aug_drop", "must lie in [0, 1)");
  require(aug_scale_lo > 0.0 && aug_scale_lo <= aug_scale_hi, "aug_scale_lo", "must be positive and <= aug_scale_hi");
  require(weak_jitter >= 0.0, "weak_jitter", "must be nonnegative");
}

bool RunConfig::operator==(const RunConfig& o) const { return to_json(*this) == to_json(o); }

void DataConfig::validate() const {
  require(classes >= 2, "classes", "must be at least 2");
  require(n >= classes, "n", "must be at least classes");
  require(dim >= 2, "dim", "must be at least 2");
  require(spread > 0.0, "spread", "must be positive");
  require(in_unit(noise_rate), "noise_rate", "must lie in [0, 1]");
}

Dataset DataConfig::build() const {
  validate();
  NoiseSpec noise;
  noise.kind = noise_kind;
  noise.rate = noise_rate;
  noise.rng_seed = noise_seed;
  return inject_noise(make_blobs(n, classes, dim, spread, data_seed), noise);
}

json to_json(const RunConfig& c) {
  json sched = json::array();
  for (const auto& m : c.lr_schedule) sched.push_back({{"epoch", m.epoch}, {"factor", m.factor}});
  return json{{"alpha", c.alpha},
              {"beta", c.beta},
              {"k", c.k},
              {"posterior_source", enum_name(c.posterior_source, kPosteriorNames)},
              {"alpha_m", c.alpha_m},
              {"tau", c.tau},
              {"lambda_c", c.lambda_c},
              {"lambda_s", c.lambda_s},
              {"k_eval", c.k_eval},
              {"tau_knn", c.tau_knn},
              {"knn_labels", enum_name(c.knn_labels, kKnnNames)},
              {"warmup_epochs", c.warmup_epochs},
              {"max_epochs", c.max_epochs},
              {"finetune_epochs", c.finetune_epochs},
              {"batch_size", c.batch_size},
              {"lr", c.lr},
              {"lr_schedule", sched},
              {"momentum", c.momentum},
              {"weight_decay", c.weight_decay},
              {"warmup_kind", enum_name(c.warmup_kind, kWarmupNames)},
              {"finetune_lr", c.finetune_lr},
              {"finetune_encoder_scale", c.finetune_encoder_scale},
              {"finetune_freeze_encoder", c.finetune_freeze_encoder},
              {"finetune_retrain_head", c.finetune_retrain_head},
              {"hidden_dim", c.hidden_dim},
              {"proj_dim", c.proj_dim},
              {"projection", enum_name(c.projection, kProjectionNames)},
              {"aug_jitter", c.aug_jitter},
              {"aug_drop", c.aug_drop},
              {"aug_scale_lo", c.aug_scale_lo},
              {"aug_scale_hi", c.aug_scale_hi},
              {"weak_jitter", c.weak_jitter},
              {"seed", c.seed},
              {"record_wall_time", c.record_wall_time}};
}

json to_json(const DataConfig& c) {
  return json{{"n", c.n},
              {"classes", c.classes},
              {"dim", c.dim},
              {"spread", c.spread},
              {"data_seed", c.data_seed},
              {"noise_kind", enum_name(c.noise_kind, kNoiseNames)},
              {"noise_rate", c.noise_rate},
              {"noise_seed", c.noise_seed}};
}

void apply_json(RunConfig& c, const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  read(j, "alpha", c.alpha);
  read(j, "beta", c.beta);
  read(j, "k", c.k);
  read_enum(j, "posterior_source", c.posterior_source, kPosteriorNames);
  read(j, "alpha_m", c.alpha_m);
  read(j, "tau", c.tau);
  read(j, "lambda_c", c.lambda_c);
  read(j, "lambda_s", c.lambda_s);
  read(j, "k_eval", c.k_eval);
  read(j, "tau_knn", c.tau_knn);
  read_enum(j, "knn_labels", c.knn_labels, kKnnNames);
  read(j, "warmup_epochs", c.warmup_epochs);
  read(j, "max_epochs", c.max_epochs);
  read(j, "finetune_epochs", c.finetune_epochs);
  read(j, "batch_size", c.batch_size);
  read(j, "lr", c.lr);
  if (j.contains("lr_schedule")) {
    const auto& s = j.at("lr_schedule");
    if (!s.is_array()) throw ConfigError("lr_schedule must be an array");
    c.lr_schedule.clear();
    for (const auto& e : s) {
      LrMilestone m;
      read(e, "epoch", m.epoch);
      read(e, "factor", m.factor);
      c.lr_schedule.push_back(m);
    }
  }
  read(j, "momentum", c.momentum);
  read(j, "weight_decay", c.weight_decay);
  read_enum(j, "warmup_kind", c.warmup_kind, kWarmupNames);
  read(j, "finetune_lr", c.finetune_lr);
  read(j, "finetune_encoder_scale", c.finetune_encoder_scale);
  read(j, "finetune_freeze_encoder", c.finetune_freeze_encoder);
  read(j, "finetune_retrain_head", c.finetune_retrain_head);
  read(j, "hidden_dim", c.hidden_dim);
  read(j, "proj_dim", c.proj_dim);
  read_enum(j, "projection", c.projection, kProjectionNames);
  read(j, "aug_jitter", c.aug_jitter);
  read(j, "aug_drop", c.aug_drop);
  read(j, "aug_scale_lo", c.aug_scale_lo);
  read(j, "aug_scale_hi", c.aug_scale_hi);
  read(j, "weak_jitter", c.weak_jitter);
  read(j, "seed", c.seed);
  read(j, "record_wall_time", c.record_wall_time);
  c.validate();
}

void apply_json(DataConfig& c, const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  read(j, "n", c.n);
  read(j, "classes", c.classes);
  read(j, "dim", c.dim);
  read(j, "spread", c.spread);
  read(j, "data_seed", c.data_seed);
  read_enum(j, "noise_kind", c.noise_kind, kNoiseNames);
  read(j, "noise_rate", c.noise_rate);
  read(j, "noise_seed", c.noise_seed);
  c.validate();
}

ConfigFile parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const json run_keys = to_json(RunConfig{});
  const json data_keys = to_json(DataConfig{});
  for (const auto& [key, value] : j.items()) {
    if (key == "schema_version") continue;
    if (!run_keys.contains(key) && !data_keys.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  ConfigFile cf;
  apply_json(cf.run, j);
  apply_json(cf.data, j);
  return cf;
}

json to_json(const ConfigFile& cfg) {
  json j = to_json(cfg.run);
  j.update(to_json(cfg.data));
  return j;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

void save_config(const ConfigFile& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(cfg).dump(2) << '\n';
}

ConfigFile blob_benchmark(std::uint64_t seed) {
  ConfigFile cf;
  cf.data.n = 500;
  cf.data.classes = 4;
  cf.data.dim = 16;
  cf.data.noise_kind = NoiseKind::kSymmetric;
  cf.data.noise_rate = 0.4;
  cf.data.data_seed = seed;
  cf.data.noise_seed = seed;
  cf.run.seed = seed;
  cf.run.lr = 0.005;
  return cf;
}

}  // namespace selcl
