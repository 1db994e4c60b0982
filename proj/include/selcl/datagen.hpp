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
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "selcl/common.hpp"

namespace selcl {

enum class Split : std::uint8_t { kTrain, kTest };

/// Labeled vector data. Row i of `instances` is example i. `noisy_labels` is
/// what a learner observes; `true_labels` stays hidden except to metrics.
struct Dataset {
  Eigen::MatrixXd instances;
  std::vector<int> true_labels;
  std::vector<int> noisy_labels;
  std::vector<Split> split;
  int num_classes = 0;

  std::size_t size() const { return true_labels.size(); }
  int dim() const { return static_cast<int>(instances.cols()); }

  std::vector<int> train_indices() const;
  std::vector<int> test_indices() const;

  /// Throws InvalidArgument when any structural invariant is broken.
  void validate() const;

  bool operator==(const Dataset& other) const;
};

enum class NoiseKind : std::uint8_t { kSymmetric, kAsymmetric };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kSymmetric;
  double rate = 0.0;
  /// Class -> class flip table for asymmetric noise. Entries mapping a class
  /// to itself mark classes that never flip. Defaults to c -> (c+1) mod C.
  std::optional<std::vector<int>> asym_map;
  std::uint64_t rng_seed = 0;
};

/// Feature-space augmentation: add N(0, jitter_sigma^2) noise, zero
/// coordinates with `drop_prob`, then scale by s ~ U[scale_lo, scale_hi].
struct AugmentationSpec {
  double jitter_sigma = 0.0;
  double drop_prob = 0.0;
  double scale_lo = 1.0;
  double scale_hi = 1.0;

  void validate() const;
};

/// C isotropic Gaussian clusters, labels balanced to within one per class,
/// stratified 80/20 train/test split.
Dataset make_blobs(int n, int num_classes, int dim, double cluster_spread, std::uint64_t seed);

/// Returns a copy of `ds` with train labels corrupted. Test labels, instances
/// and true labels are untouched.
Dataset inject_noise(const Dataset& ds, const NoiseSpec& spec);

Eigen::VectorXd augment(const Eigen::Ref<const Eigen::VectorXd>& x, const AugmentationSpec& spec,
                        Rng& rng);

enum class Dominant : std::uint8_t { kA, kB };

struct MixupResult {
  Eigen::VectorXd mixed;
  double lambda = 1.0;
  Dominant dominant = Dominant::kA;
};

/// Draws lambda ~ Beta(alpha_m, alpha_m) and mixes the two inputs.
MixupResult mixup_combine(const Eigen::Ref<const Eigen::VectorXd>& x_a,
                          const Eigen::Ref<const Eigen::VectorXd>& x_b, double alpha_m, Rng& rng);

/// Mixes with a caller-chosen lambda in [0, 1]. Dominance goes to a when
/// lambda >= 0.5.
MixupResult mixup_with_lambda(const Eigen::Ref<const Eigen::VectorXd>& x_a,
                              const Eigen::Ref<const Eigen::VectorXd>& x_b, double lambda);

double sample_beta(double a, double b, Rng& rng);

/// Reads `feature_0,...,feature_{D-1},true_label,noisy_label,split` rows.
/// When `num_classes` is not given it is inferred as max label + 1.
Dataset load_features_csv(const std::filesystem::path& path,
                          std::optional<int> num_classes = std::nullopt);

/// Writes the format read by load_features_csv. Values round-trip exactly.
void dump_features_csv(const Dataset& ds, const std::filesystem::path& path);

}  // namespace selcl
