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

#include "selcl/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace selcl {

void EmbeddingBank::validate(double tol) const {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    if (std::abs(z.row(i).norm() - 1.0) > tol) {
      throw InvalidArgument("embedding bank row " + std::to_string(i) + " is not unit norm");
    }
  }
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("cosine_sim: vectors differ in length");
  double dot = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  if (aa == 0.0 || bb == 0.0) throw InvalidArgument("cosine_sim: zero vector");
  return std::clamp(dot / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

SimilarityMatrix::SimilarityMatrix(const EmbeddingBank& bank)
    : n_(static_cast<std::size_t>(bank.z.rows())), values_(n_ * n_) {
  // Row-major copy so each row is a contiguous span.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = bank.z;
  const auto dim = static_cast<std::size_t>(rows.cols());
  const auto row = [&](std::size_t i) { return std::span<const double>(rows.data() + i * dim, dim); };
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i; j < n_; ++j) {
      const double s = cosine_sim(row(i), row(j));
      values_[i * n_ + j] = s;
      values_[j * n_ + i] = s;
    }
  }
}

std::vector<int> topk_neighbors(const SimilarityMatrix& sim, int i, int k) {
  const int n = sim.size();
  if (i < 0 || i >= n) throw InvalidArgument("topk_neighbors: index out of range");
  if (k < 1 || k > n - 1) {
    throw InvalidArgument("topk_neighbors: K=" + std::to_string(k) + " outside [1, " + std::to_string(n - 1) + "]");
  }
  std::vector<int> others;
  others.reserve(static_cast<std::size_t>(n - 1));
  for (int j = 0; j < n; ++j) {
    if (j != i) others.push_back(j);
  }
  const auto closer = [&](int a, int b) {
    const double sa = sim(i, a);
    const double sb = sim(i, b);
    return sa != sb ? sa > sb : a < b;
  };
  std::partial_sort(others.begin(), others.begin() + k, others.end(), closer);
  others.resize(static_cast<std::size_t>(k));
  return others;
}

std::vector<int> topk_neighbors(const EmbeddingBank& bank, int i, int k) {
  return topk_neighbors(SimilarityMatrix(bank), i, k);
}

int effective_k(int requested, int n) { return std::max(1, std::min(requested, n - 1)); }

PseudoLabelState aggregate_pseudo_labels(const SimilarityMatrix& sim, std::span<const int> noisy_labels,
                                         int num_classes, int k, PosteriorSource source) {
  const int n = sim.size();
  if (static_cast<int>(noisy_labels.size()) != n) {
    throw DimensionMismatch("aggregate_pseudo_labels: label count differs from bank size");
  }
  if (k < 1) throw InvalidArgument("aggregate_pseudo_labels: K must be at least 1");

  PseudoLabelState st;
  st.k = k;
  st.neighbors.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) st.neighbors[static_cast<std::size_t>(i)] = topk_neighbors(sim, i, k);

  st.pseudo_labels.resize(static_cast<std::size_t>(n));
  std::vector<int> counts(static_cast<std::size_t>(num_classes));
  for (int i = 0; i < n; ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    for (int j : st.neighbors[static_cast<std::size_t>(i)]) ++counts.at(static_cast<std::size_t>(noisy_labels[static_cast<std::size_t>(j)]));
    const int best = *std::max_element(counts.begin(), counts.end());
    const int own = noisy_labels[static_cast<std::size_t>(i)];
    int label = own;
    if (counts[static_cast<std::size_t>(own)] != best) {
      label = static_cast<int>(std::find(counts.begin(), counts.end(), best) - counts.begin());
    }
    st.pseudo_labels[static_cast<std::size_t>(i)] = label;
  }

  const std::span<const int> voters =
      source == PosteriorSource::kPseudoLabels ? std::span<const int>(st.pseudo_labels) : noisy_labels;
  st.posterior = Matrix::Zero(n, num_classes);
  for (int i = 0; i < n; ++i) {
    for (int j : st.neighbors[static_cast<std::size_t>(i)]) st.posterior(i, voters[static_cast<std::size_t>(j)]) += 1.0;
  }
  st.posterior /= static_cast<double>(k);
  return st;
}

PseudoLabelState aggregate_pseudo_labels(const EmbeddingBank& bank, std::span<const int> noisy_labels,
                                         int num_classes, int k, PosteriorSource source) {
  return aggregate_pseudo_labels(SimilarityMatrix(bank), noisy_labels, num_classes, k, source);
}

}  // namespace selcl
