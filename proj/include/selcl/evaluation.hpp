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

#include <filesystem>
#include <span>
#include <vector>

#include "selcl/selection.hpp"

namespace selcl {

inline constexpr int kDefaultKnnEval = 200;
inline constexpr double kDefaultKnnTemperature = 0.1;

/// Similarity-weighted vote: each query takes its K most cosine-similar
/// reference rows, weights each by exp(sim / tau) and predicts the class with
/// the largest total (smallest class on ties).
std::vector<int> weighted_knn_predict(const Matrix& reference, std::span<const int> reference_labels,
                                      const Matrix& queries, int num_classes, int k, double tau);

/// Accuracy (percent) of weighted_knn_predict against `query_labels`.
double weighted_knn_eval(const Matrix& reference, std::span<const int> reference_labels, const Matrix& queries,
                         std::span<const int> query_labels, int num_classes, int k = kDefaultKnnEval,
                         double tau = kDefaultKnnTemperature);

double accuracy_percent(std::span<const int> predicted, std::span<const int> truth);

struct SelectionPrecision {
  double examples = 100.0;  // percent of selected examples whose observed label is correct
  double pairs = 100.0;     // percent of selected pairs whose true labels agree
  std::size_t n_examples = 0;
  std::size_t n_pairs = 0;
  bool examples_empty = true;  // precision reported as 100 with zero count
  bool pairs_empty = true;
};

/// Indices in `selected` and `pairs` address `true_labels`/`noisy_labels`.
SelectionPrecision selection_precision(std::span<const int> selected, const PairSet& pairs,
                                       std::span<const int> true_labels, std::span<const int> noisy_labels);

struct Projection2d {
  Matrix coords;             // n x 2, column 0 on the leading principal axis
  Eigen::Vector2d variance;  // variance captured by each axis
  double residual = 0.0;     // squared reconstruction error summed over rows
};

/// PCA of the centered rows onto the top two principal axes. Each axis is
/// signed so that its largest-magnitude loading is positive.
Projection2d project_2d(const Matrix& points);

/// Writes `x,y,true_label,noisy_label,in_T` rows.
void dump_projection_2d(const Matrix& points, std::span<const int> true_labels, std::span<const int> noisy_labels,
                        std::span<const char> in_confident, const std::filesystem::path& path);

}  // namespace selcl
