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
#include <string>
#include <vector>

#include <json.hpp>

#include "selcl/datagen.hpp"
#include "selcl/model.hpp"
#include "selcl/neighbors.hpp"

namespace selcl {

/// Bad or inconsistent configuration. The CLI maps it to exit code 1.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class WarmupKind : std::uint8_t { kUnsupervised, kSupervised };
enum class KnnLabelSource : std::uint8_t { kNoisy, kPseudo };

/// Every training hyperparameter. JSON keys match the field names.
struct RunConfig {
  // selection
  double alpha = 0.5;
  double beta = 0.25;
  int k = kDefaultNeighbors;
  PosteriorSource posterior_source = PosteriorSource::kPseudoLabels;

  // objective
  double alpha_m = 1.0;
  double tau = 0.1;
  double lambda_c = 1.0;
  double lambda_s = 0.01;

  // evaluation
  int k_eval = 200;
  double tau_knn = 0.1;
  KnnLabelSource knn_labels = KnnLabelSource::kNoisy;

  // schedule
  int warmup_epochs = 1;
  int max_epochs = 30;
  int finetune_epochs = 20;
  int batch_size = 32;
  double lr = 0.02;
  std::vector<LrMilestone> lr_schedule;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  WarmupKind warmup_kind = WarmupKind::kUnsupervised;

  // fine-tuning
  double finetune_lr = 0.001;
  double finetune_encoder_scale = 0.1;
  bool finetune_freeze_encoder = false;
  bool finetune_retrain_head = true;

  // network
  int hidden_dim = 64;
  int proj_dim = 32;
  ProjectionKind projection = ProjectionKind::kLinear;

  // augmentation
  double aug_jitter = 0.2;
  double aug_drop = 0.1;
  double aug_scale_lo = 0.8;
  double aug_scale_hi = 1.2;
  double weak_jitter = 0.05;

  std::uint64_t seed = 0;
  bool record_wall_time = false;

  AugmentationSpec strong_augmentation() const;
  AugmentationSpec weak_augmentation() const;
  Architecture architecture(int input_dim, int num_classes) const;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  bool operator==(const RunConfig&) const;
};

/// Synthetic benchmark dataset recipe.
struct DataConfig {
  int n = 500;
  int classes = 4;
  int dim = 16;
  double spread = 1.0;
  std::uint64_t data_seed = 1;
  NoiseKind noise_kind = NoiseKind::kSymmetric;
  double noise_rate = 0.4;
  std::uint64_t noise_seed = 1;

  void validate() const;
  Dataset build() const;

  bool operator==(const DataConfig&) const = default;
};

nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const DataConfig& cfg);

/// Reads the keys of `j` that belong to the struct and leaves the rest alone.
/// Type errors and out-of-domain values raise ConfigError.
void apply_json(RunConfig& cfg, const nlohmann::json& j);
void apply_json(DataConfig& cfg, const nlohmann::json& j);

/// A flat config file may mix run and data keys. Unknown keys raise
/// ConfigError.
struct ConfigFile {
  RunConfig run;
  DataConfig data;
};

ConfigFile parse_config(const nlohmann::json& j);
nlohmann::json to_json(const ConfigFile& cfg);
ConfigFile load_config(const std::filesystem::path& path);
void save_config(const ConfigFile& cfg, const std::filesystem::path& path);

/// The benchmark used by the acceptance suite: 500 examples, 4 classes,
/// 16 dimensions, 40% symmetric noise, with desk-scale training settings.
ConfigFile blob_benchmark(std::uint64_t seed);

}  // namespace selcl
