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

#include <span>
#include <vector>

#include "selcl/model.hpp"

namespace selcl {

/// Low-dimensional representations of the training set for one epoch.
struct EmbeddingBank {
  Matrix z;  // n x P, unit-norm rows
  int epoch_tag = 0;

  int size() const { return static_cast<int>(z.rows()); }

  /// Throws InvalidArgument if a row norm is off by more than `tol`.
  void validate(double tol = 1e-6) const;
};

/// Cosine of the angle between two nonzero vectors.
double cosine_sim(std::span<const double> a, std::span<const double> b);

/// Dense n x n cosine similarities of the bank rows. Each entry is computed
/// with cosine_sim, so the matrix is exactly symmetric.
class SimilarityMatrix {
 public:
  explicit SimilarityMatrix(const EmbeddingBank& bank);

  double operator()(int i, int j) const { return values_[static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(j)]; }
  int size() const { return static_cast<int>(n_); }

 private:
  std::size_t n_;
  std::vector<double> values_;
};

/// The K most similar other rows to row i, most similar first, ties broken
/// by ascending index.
std::vector<int> topk_neighbors(const SimilarityMatrix& sim, int i, int k);
std::vector<int> topk_neighbors(const EmbeddingBank& bank, int i, int k);

/// Which labels the posterior estimate counts among the neighbors.
enum class PosteriorSource : std::uint8_t {
  kPseudoLabels,  // neighbors' corrected labels
  kNoisyLabels,   // neighbors' observed labels ("w/o pseudo-labels" ablation)
};

struct PseudoLabelState {
  std::vector<int> pseudo_labels;  // corrected label per example
  Matrix posterior;                // n x C, row-stochastic
  int k = 0;
  std::vector<std::vector<int>> neighbors;
};

inline constexpr int kDefaultNeighbors = 250;

/// Clips the requested neighbor count to n - 1.
int effective_k(int requested, int n);

/// Two passes over the same neighbor lists. First the corrected label of i is
/// the most frequent observed label among its K neighbors (a tie keeps i's own
/// label when it is among the leaders, else the smallest class). Then the
/// posterior of i counts the neighbors' corrected labels, divided by K.
PseudoLabelState aggregate_pseudo_labels(const SimilarityMatrix& sim, std::span<const int> noisy_labels,
                                         int num_classes, int k,
                                         PosteriorSource source = PosteriorSource::kPseudoLabels);
PseudoLabelState aggregate_pseudo_labels(const EmbeddingBank& bank, std::span<const int> noisy_labels,
                                         int num_classes, int k,
                                         PosteriorSource source = PosteriorSource::kPseudoLabels);

}  // namespace selcl
