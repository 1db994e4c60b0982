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
#include "selcl/selection.hpp"

namespace selcl {

/// Multi-view batch for the contrastive losses: M = 2N unit-norm embeddings.
/// `origin[i]` is the dataset index view i was made from and `twin[i]` the
/// other augmented view of the same example.
struct ContrastiveBatch {
  Matrix z;
  std::vector<int> origin;
  std::vector<int> twin;

  int size() const { return static_cast<int>(z.rows()); }
  void validate() const;
};

/// Views [0, N) are the first augmentation, [N, 2N) the second.
std::vector<int> twin_layout(int n_examples);

/// Mixed view built as lambda * x_a + (1 - lambda) * x_b.
struct MixRecord {
  int a = 0;
  int b = 0;
  double lambda = 1.0;

  int dominant() const { return lambda >= 0.5 ? a : b; }
};

struct MixedBatch {
  Matrix z;
  std::vector<MixRecord> mix;
  std::vector<int> twin;

  int size() const { return static_cast<int>(z.rows()); }
  void validate() const;
};

struct ContrastiveResult {
  double value = 0.0;
  Matrix grad_z;
};

/// Sum over anchors i of -1/|G(i)| sum_{g in G(i)} log softmax_i(g), where the
/// softmax runs over all other views with logits z_i.z_a / tau. G(i) holds the
/// twin, any other view of the same example, and every view whose example
/// forms a pair with i's example in `pairs`. Anchors with nothing beyond the
/// twin reduce to the unsupervised term.
ContrastiveResult sup_contrastive(const ContrastiveBatch& batch, const PairSet& pairs, double tau);

/// NT-Xent: the twin is the only positive.
ContrastiveResult unsup_contrastive(const ContrastiveBatch& batch, double tau);

/// Per anchor: lambda * L_a + (1 - lambda) * L_b, where L_a uses the positives
/// of identity a and L_b those of identity b. Every other view takes part
/// under its dominant identity only.
ContrastiveResult mixup_contrastive(const MixedBatch& batch, const PairSet& pairs, double tau);

struct HeadResult {
  double value = 0.0;
  Matrix grad_p;
};

/// Mean of -log(p[label] + 1e-12) over the rows flagged in `use_row`.
HeadResult classification_loss(const Matrix& p, std::span<const int> labels, std::span<const char> use_row);

inline constexpr double kSimilarityClamp = 1e-7;

/// Mean binary cross-entropy over ordered pairs (i, j != i) between
/// s = p_i . p_j (clamped to [1e-7, 1 - 1e-7]) and the target "same example
/// or pair in `pairs`".
HeadResult similarity_loss(const Matrix& p, std::span<const int> origin, const PairSet& pairs);

double total_loss(double l_mix, double l_cls, double l_sim, double lambda_c, double lambda_s);

struct LossBundle {
  double l_mix = 0.0;
  double l_cls = 0.0;
  double l_sim = 0.0;
  double l_all = 0.0;
  Matrix grad_z_mixed;
  Matrix grad_p;
};

}  // namespace selcl
