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

#include "selcl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/SVD>

#include "selcl/io_util.hpp"

namespace selcl {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::span<const double> row_span(const RowMajor& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

std::vector<int> weighted_knn_predict(const Matrix& reference, std::span<const int> reference_labels,
                                      const Matrix& queries, int num_classes, int k, double tau) {
  const Eigen::Index n_ref = reference.rows();
  if (queries.rows() == 0) throw InvalidArgument("weighted_knn: empty query set");
  if (static_cast<Eigen::Index>(reference_labels.size()) != n_ref) {
    throw DimensionMismatch("weighted_knn: reference labels differ in length");
  }
  if (reference.cols() != queries.cols()) throw DimensionMismatch("weighted_knn: embedding widths differ");
  if (k < 1 || k > n_ref) throw InvalidArgument("weighted_knn: K must lie in [1, n_reference]");
  if (!(tau > 0.0)) throw InvalidArgument("weighted_knn: temperature must be positive");

  const RowMajor ref = reference;
  const RowMajor qry = queries;
  std::vector<int> order(static_cast<std::size_t>(n_ref));
  std::vector<double> sims(static_cast<std::size_t>(n_ref));
  std::vector<double> votes(static_cast<std::size_t>(num_classes));
  std::vector<int> out(static_cast<std::size_t>(queries.rows()));

  for (Eigen::Index q = 0; q < qry.rows(); ++q) {
    for (Eigen::Index j = 0; j < n_ref; ++j) sims[static_cast<std::size_t>(j)] = cosine_sim(row_span(qry, q), row_span(ref, j));
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
      const double sa = sims[static_cast<std::size_t>(a)];
      const double sb = sims[static_cast<std::size_t>(b)];
      return sa != sb ? sa > sb : a < b;
    });
    std::fill(votes.begin(), votes.end(), 0.0);
    for (int r = 0; r < k; ++r) {
      const int j = order[static_cast<std::size_t>(r)];
      votes.at(static_cast<std::size_t>(reference_labels[static_cast<std::size_t>(j)])) +=
          std::exp(sims[static_cast<std::size_t>(j)] / tau);
    }
    out[static_cast<std::size_t>(q)] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

double accuracy_percent(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw DimensionMismatch("accuracy: length mismatch");
  if (truth.empty()) throw InvalidArgument("accuracy: empty set");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i] ? 1 : 0;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(truth.size());
}

double weighted_knn_eval(const Matrix& reference, std::span<const int> reference_labels, const Matrix& queries,
                         std::span<const int> query_labels, int num_classes, int k, double tau) {
  const auto pred = weighted_knn_predict(reference, reference_labels, queries, num_classes, k, tau);
  return accuracy_percent(pred, query_labels);
}

SelectionPrecision selection_precision(std::span<const int> selected, const PairSet& pairs,
                                       std::span<const int> true_labels, std::span<const int> noisy_labels) {
  SelectionPrecision p;
  p.n_examples = selected.size();
  p.n_pairs = pairs.size();
  p.examples_empty = selected.empty();
  p.pairs_empty = pairs.empty();
  if (!selected.empty()) {
    std::size_t clean = 0;
    for (int i : selected) {
      clean += noisy_labels[static_cast<std::size_t>(i)] == true_labels[static_cast<std::size_t>(i)] ? 1 : 0;
    }
    p.examples = 100.0 * static_cast<double>(clean) / static_cast<double>(selected.size());
  }
  if (!pairs.empty()) {
    std::size_t agree = 0;
    for (const auto& [i, j] : pairs) {
      agree += true_labels[static_cast<std::size_t>(i)] == true_labels[static_cast<std::size_t>(j)] ? 1 : 0;
    }
    p.pairs = 100.0 * static_cast<double>(agree) / static_cast<double>(pairs.size());
  }
  return p;
}

Projection2d project_2d(const Matrix& points) {
  const Eigen::Index n = points.rows();
  if (n < 3) throw InvalidArgument("project_2d: need at least 3 points");
  const Matrix centered = points.rowwise() - points.colwise().mean();
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  Matrix axes = Matrix::Zero(points.cols(), 2);
  const Eigen::Index k = std::min<Eigen::Index>(2, svd.matrixV().cols());
  for (Eigen::Index a = 0; a < k; ++a) {
    Vector axis = svd.matrixV().col(a);
    Eigen::Index lead = 0;
    axis.cwiseAbs().maxCoeff(&lead);
    if (axis[lead] < 0) axis = -axis;
    axes.col(a) = axis;
  }
  Projection2d out;
  out.coords = centered * axes;
  for (Eigen::Index a = 0; a < 2; ++a) {
    out.variance[a] = out.coords.col(a).squaredNorm() / static_cast<double>(n - 1);
  }
  out.residual = (centered - out.coords * axes.transpose()).squaredNorm();
  return out;
}

void dump_projection_2d(const Matrix& points, std::span<const int> true_labels, std::span<const int> noisy_labels,
                        std::span<const char> in_confident, const std::filesystem::path& path) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (true_labels.size() != n || noisy_labels.size() != n || in_confident.size() != n) {
    throw DimensionMismatch("dump_projection_2d: label columns differ in length");
  }
  const Projection2d proj = project_2d(points);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "x,y,true_label,noisy_label,in_T\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << format_double(proj.coords(r, 0)) << ',' << format_double(proj.coords(r, 1)) << ',' << true_labels[i] << ','
        << noisy_labels[i] << ',' << (in_confident[i] ? 1 : 0) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace selcl
