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

#include "selcl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace selcl {

namespace {

/// Positives of one anchor under identity a and identity b, blended by lambda.
/// Pure (unmixed) anchors use lambda = 1 and the same list twice.
struct AnchorTargets {
  std::vector<int> pos_a;
  std::vector<int> pos_b;
  double lambda = 1.0;
};

void check_tau(double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("temperature must be positive");
}

void check_twins(const std::vector<int>& twin, int m) {
  if (static_cast<int>(twin.size()) != m) throw DimensionMismatch("batch: twin list has the wrong length");
  for (int i = 0; i < m; ++i) {
    const int t = twin[static_cast<std::size_t>(i)];
    if (t < 0 || t >= m || t == i || twin[static_cast<std::size_t>(t)] != i) {
      throw InvalidArgument("batch: twin relation must pair distinct views");
    }
  }
}

ContrastiveResult contrastive_core(const Matrix& z, const std::vector<AnchorTargets>& targets, double tau) {
  const int m = static_cast<int>(z.rows());
  ContrastiveResult r;
  r.grad_z = Matrix::Zero(z.rows(), z.cols());
  if (m < 2) return r;

  Vector logits(m);
  Vector coeff(m);
  for (int i = 0; i < m; ++i) {
    const AnchorTargets& t = targets[static_cast<std::size_t>(i)];
    double top = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < m; ++a) {
      if (a == i) continue;
      logits[a] = z.row(i).dot(z.row(a)) / tau;
      top = std::max(top, logits[a]);
    }
    double denom = 0.0;
    for (int a = 0; a < m; ++a) {
      if (a != i) denom += std::exp(logits[a] - top);
    }
    const double lse = top + std::log(denom);

    const auto anchor_loss = [&](const std::vector<int>& pos) {
      double acc = 0.0;
      for (int g : pos) acc += logits[g] - lse;
      return -acc / static_cast<double>(pos.size());
    };
    const double loss_a = anchor_loss(t.pos_a);
    const double loss_b = anchor_loss(t.pos_b);
    r.value += t.lambda * loss_a + (1.0 - t.lambda) * loss_b;

    // d loss / d logit_a = softmax_a - [a in P] / |P|, blended by lambda.
    Vector ind_a = Vector::Zero(m);
    Vector ind_b = Vector::Zero(m);
    for (int g : t.pos_a) ind_a[g] += 1.0 / static_cast<double>(t.pos_a.size());
    for (int g : t.pos_b) ind_b[g] += 1.0 / static_cast<double>(t.pos_b.size());
    for (int a = 0; a < m; ++a) {
      if (a == i) {
        coeff[a] = 0.0;
        continue;
      }
      const double soft = std::exp(logits[a] - lse);
      coeff[a] = t.lambda * (soft - ind_a[a]) + (1.0 - t.lambda) * (soft - ind_b[a]);
    }
    for (int a = 0; a < m; ++a) {
      if (a == i || coeff[a] == 0.0) continue;
      r.grad_z.row(i) += (coeff[a] / tau) * z.row(a);
      r.grad_z.row(a) += (coeff[a] / tau) * z.row(i);
    }
  }
  return r;
}

}  // namespace

void ContrastiveBatch::validate() const {
  if (static_cast<Eigen::Index>(origin.size()) != z.rows()) {
    throw DimensionMismatch("batch: origin list has the wrong length");
  }
  check_twins(twin, size());
}

void MixedBatch::validate() const {
  if (static_cast<Eigen::Index>(mix.size()) != z.rows()) throw DimensionMismatch("batch: mix list has the wrong length");
  for (const auto& r : mix) {
    if (!(r.lambda >= 0.0 && r.lambda <= 1.0)) throw InvalidArgument("mixup: lambda must lie in [0, 1]");
  }
  check_twins(twin, size());
}

std::vector<int> twin_layout(int n_examples) {
  std::vector<int> t(static_cast<std::size_t>(2 * n_examples));
  for (int i = 0; i < n_examples; ++i) {
    t[static_cast<std::size_t>(i)] = i + n_examples;
    t[static_cast<std::size_t>(i + n_examples)] = i;
  }
  return t;
}

ContrastiveResult sup_contrastive(const ContrastiveBatch& batch, const PairSet& pairs, double tau) {
  check_tau(tau);
  batch.validate();
  const int m = batch.size();
  std::vector<AnchorTargets> targets(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    auto& t = targets[static_cast<std::size_t>(i)];
    const int oi = batch.origin[static_cast<std::size_t>(i)];
    for (int g = 0; g < m; ++g) {
      if (g == i) continue;
      const int og = batch.origin[static_cast<std::size_t>(g)];
      if (g == batch.twin[static_cast<std::size_t>(i)] || og == oi || pairs.contains(oi, og)) t.pos_a.push_back(g);
    }
    t.pos_b = t.pos_a;
  }
  return contrastive_core(batch.z, targets, tau);
}

ContrastiveResult unsup_contrastive(const ContrastiveBatch& batch, double tau) {
  check_tau(tau);
  batch.validate();
  const int m = batch.size();
  std::vector<AnchorTargets> targets(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    auto& t = targets[static_cast<std::size_t>(i)];
    t.pos_a = {batch.twin[static_cast<std::size_t>(i)]};
    t.pos_b = t.pos_a;
  }
  return contrastive_core(batch.z, targets, tau);
}

ContrastiveResult mixup_contrastive(const MixedBatch& batch, const PairSet& pairs, double tau) {
  check_tau(tau);
  batch.validate();
  const int m = batch.size();
  std::vector<AnchorTargets> targets(static_cast<std::size_t>(m));
  const auto positives = [&](int i, int identity) {
    std::vector<int> pos;
    for (int g = 0; g < m; ++g) {
      if (g == i) continue;
      const int dg = batch.mix[static_cast<std::size_t>(g)].dominant();
      if (g == batch.twin[static_cast<std::size_t>(i)] || dg == identity || pairs.contains(identity, dg)) {
        pos.push_back(g);
      }
    }
    return pos;
  };
  for (int i = 0; i < m; ++i) {
    const MixRecord& r = batch.mix[static_cast<std::size_t>(i)];
    auto& t = targets[static_cast<std::size_t>(i)];
    t.pos_a = positives(i, r.a);
    t.pos_b = positives(i, r.b);
    t.lambda = r.lambda;
  }
  return contrastive_core(batch.z, targets, tau);
}

HeadResult classification_loss(const Matrix& p, std::span<const int> labels, std::span<const char> use_row) {
  if (static_cast<Eigen::Index>(labels.size()) != p.rows() || static_cast<Eigen::Index>(use_row.size()) != p.rows()) {
    throw DimensionMismatch("classification_loss: label or mask length differs from batch");
  }
  HeadResult r;
  r.grad_p = Matrix::Zero(p.rows(), p.cols());
  int count = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) count += use_row[static_cast<std::size_t>(i)] ? 1 : 0;
  if (count == 0) return r;
  const double scale = 1.0 / static_cast<double>(count);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if (!use_row[static_cast<std::size_t>(i)]) continue;
    const int y = labels[static_cast<std::size_t>(i)];
    const double py = p(i, y) + kLogEps;
    r.value -= std::log(py);
    r.grad_p(i, y) = -scale / py;
  }
  r.value *= scale;
  return r;
}

HeadResult similarity_loss(const Matrix& p, std::span<const int> origin, const PairSet& pairs) {
  const Eigen::Index m = p.rows();
  if (static_cast<Eigen::Index>(origin.size()) != m) throw DimensionMismatch("similarity_loss: origin length differs");
  HeadResult r;
  r.grad_p = Matrix::Zero(m, p.cols());
  if (m < 2) return r;
  const double scale = 1.0 / static_cast<double>(m * (m - 1));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i == j) continue;
      const int oi = origin[static_cast<std::size_t>(i)];
      const int oj = origin[static_cast<std::size_t>(j)];
      const bool target = oi == oj || pairs.contains(oi, oj);
      const double raw = p.row(i).dot(p.row(j));
      const double s = std::clamp(raw, kSimilarityClamp, 1.0 - kSimilarityClamp);
      r.value -= target ? std::log(s) : std::log(1.0 - s);
      if (raw != s) continue;  // clamped: zero derivative
      const double ds = scale * (target ? -1.0 / s : 1.0 / (1.0 - s));
      r.grad_p.row(i) += ds * p.row(j);
      r.grad_p.row(j) += ds * p.row(i);
    }
  }
  r.value *= scale;
  return r;
}

double total_loss(double l_mix, double l_cls, double l_sim, double lambda_c, double lambda_s) {
  return l_mix + lambda_c * l_cls + lambda_s * l_sim;
}

}  // namespace selcl
