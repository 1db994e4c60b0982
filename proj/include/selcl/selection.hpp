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
#include <utility>
#include <vector>

#include "selcl/neighbors.hpp"

namespace selcl {

/// Unordered index pair stored as (min, max).
using IndexPair = std::pair<int, int>;

inline IndexPair make_pair_key(int i, int j) { return i < j ? IndexPair{i, j} : IndexPair{j, i}; }

/// Set of unordered pairs without self-pairs, kept sorted and deduplicated.
class PairSet {
 public:
  PairSet() = default;
  /// Canonicalizes, sorts and deduplicates. Self-pairs are rejected.
  explicit PairSet(std::vector<IndexPair> pairs);

  bool contains(int i, int j) const;
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::vector<IndexPair>& pairs() const { return pairs_; }
  auto begin() const { return pairs_.begin(); }
  auto end() const { return pairs_.end(); }

  bool operator==(const PairSet&) const = default;

 private:
  std::vector<IndexPair> pairs_;
};

/// 1-based nearest-rank position of the `fractile` quantile among m sorted
/// values: ceil(fractile * m), at least 1. A 1e-9 slack keeps products such as
/// 0.35 * 20 from rounding up past the exact rank.
int nearest_rank(double fractile, std::size_t m);

/// Nearest-rank quantile of `values` (copied and sorted ascending).
double nearest_rank_quantile(std::vector<double> values, double fractile);

struct ConfidentExamples {
  std::vector<std::vector<int>> per_class;  // selection order: lowest loss first
  std::vector<int> agreement;               // per-class count of corrected == observed
  int n_sel = 0;

  /// Union of the per-class lists, ascending.
  std::vector<int> all() const;
  std::size_t total() const;
};

inline constexpr double kLogEps = 1e-12;

/// Loss of the posterior row against the observed label: -log(q[y] + eps).
double posterior_loss(const Matrix& posterior, int i, int label);

ConfidentExamples select_confident_examples(const PseudoLabelState& pseudo, std::span<const int> noisy_labels,
                                            int num_classes, double alpha);

/// All same-label pairs among the confident examples.
PairSet build_pairs_from_confident(const ConfidentExamples& confident, std::span<const int> noisy_labels);

struct ConfidentPairs {
  PairSet pairs;  // pairs with equal observed labels and similarity > gamma
  double gamma = 0.0;
};

/// gamma is the nearest-rank `beta` fractile of the similarities of the pairs
/// in `from_confident`; the result holds every same-label pair of the whole
/// set whose similarity exceeds gamma strictly. An empty input pair set gives
/// gamma = +inf and no pairs.
ConfidentPairs select_confident_pairs(const SimilarityMatrix& sim, std::span<const int> noisy_labels,
                                      const PairSet& from_confident, double beta);

PairSet union_pairs(const PairSet& a, const PairSet& b);

struct SelectionState {
  ConfidentExamples confident;
  std::vector<int> confident_all;
  PairSet g_prime;
  PairSet g_doubleprime;
  PairSet g;
  double gamma = 0.0;
  int epoch_tag = 0;
};

/// Runs the whole selection from a similarity matrix: pseudo-labels and
/// posteriors, confident examples, then confident pairs.
struct SelectionInputs {
  int num_classes = 2;
  int k = kDefaultNeighbors;
  double alpha = 0.5;
  double beta = 0.25;
  PosteriorSource source = PosteriorSource::kPseudoLabels;
};

SelectionState run_selection(const SimilarityMatrix& sim, std::span<const int> noisy_labels,
                             const SelectionInputs& in, PseudoLabelState* pseudo_out = nullptr);

}  // namespace selcl
