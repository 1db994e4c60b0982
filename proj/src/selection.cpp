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

#include "selcl/selection.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

#include <spdlog/spdlog.h>

namespace selcl {

PairSet::PairSet(std::vector<IndexPair> pairs) : pairs_(std::move(pairs)) {
  for (auto& p : pairs_) {
    if (p.first == p.second) throw InvalidArgument("PairSet: self-pair " + std::to_string(p.first));
    p = make_pair_key(p.first, p.second);
  }
  std::sort(pairs_.begin(), pairs_.end());
  pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
}

bool PairSet::contains(int i, int j) const {
  if (i == j) return false;
  return std::binary_search(pairs_.begin(), pairs_.end(), make_pair_key(i, j));
}

int nearest_rank(double fractile, std::size_t m) {
  if (m == 0) throw InvalidArgument("nearest_rank: no values");
  if (!(fractile >= 0.0 && fractile <= 1.0)) throw InvalidArgument("fractile must lie in [0, 1]");
  const double raw = std::ceil(fractile * static_cast<double>(m) - 1e-9);
  return static_cast<int>(std::clamp(raw, 1.0, static_cast<double>(m)));
}

double nearest_rank_quantile(std::vector<double> values, double fractile) {
  const int r = nearest_rank(fractile, values.size());
  std::sort(values.begin(), values.end());
  return values[static_cast<std::size_t>(r - 1)];
}

std::vector<int> ConfidentExamples::all() const {
  std::vector<int> out;
  for (const auto& c : per_class) out.insert(out.end(), c.begin(), c.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t ConfidentExamples::total() const {
  std::size_t n = 0;
  for (const auto& c : per_class) n += c.size();
  return n;
}

double posterior_loss(const Matrix& posterior, int i, int label) { return -std::log(posterior(i, label) + kLogEps); }

ConfidentExamples select_confident_examples(const PseudoLabelState& pseudo, std::span<const int> noisy_labels,
                                            int num_classes, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
  const std::size_t n = noisy_labels.size();
  if (pseudo.pseudo_labels.size() != n || static_cast<std::size_t>(pseudo.posterior.rows()) != n) {
    throw DimensionMismatch("select_confident_examples: pseudo-label state does not match labels");
  }

  ConfidentExamples out;
  out.agreement.assign(static_cast<std::size_t>(num_classes), 0);
  std::vector<std::vector<int>> members(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < n; ++i) {
    const int y = noisy_labels[i];
    members.at(static_cast<std::size_t>(y)).push_back(static_cast<int>(i));
    if (pseudo.pseudo_labels[i] == y) ++out.agreement[static_cast<std::size_t>(y)];
  }
  std::vector<double> counts(out.agreement.begin(), out.agreement.end());
  out.n_sel = static_cast<int>(nearest_rank_quantile(counts, alpha));

  out.per_class.resize(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    auto& cand = members[static_cast<std::size_t>(c)];
    std::vector<std::pair<double, int>> ranked;
    ranked.reserve(cand.size());
    for (int i : cand) ranked.emplace_back(posterior_loss(pseudo.posterior, i, c), i);
    std::sort(ranked.begin(), ranked.end());
    const std::size_t take = std::min(ranked.size(), static_cast<std::size_t>(out.n_sel));
    auto& sel = out.per_class[static_cast<std::size_t>(c)];
    for (std::size_t r = 0; r < take; ++r) sel.push_back(ranked[r].second);
  }
  return out;
}

PairSet build_pairs_from_confident(const ConfidentExamples& confident, std::span<const int> noisy_labels) {
  const std::vector<int> members = confident.all();
  std::vector<IndexPair> pairs;
  for (std::size_t a = 0; a < members.size(); ++a) {
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      const int i = members[a];
      const int j = members[b];
      if (noisy_labels[static_cast<std::size_t>(i)] == noisy_labels[static_cast<std::size_t>(j)]) pairs.emplace_back(i, j);
    }
  }
  return PairSet(std::move(pairs));
}

ConfidentPairs select_confident_pairs(const SimilarityMatrix& sim, std::span<const int> noisy_labels,
                                      const PairSet& from_confident, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in [0, 1]");
  const int n = sim.size();
  if (static_cast<int>(noisy_labels.size()) != n) {
    throw DimensionMismatch("select_confident_pairs: label count differs from bank size");
  }
  ConfidentPairs out;
  if (from_confident.empty()) {
    spdlog::warn("no confident pairs to calibrate the similarity threshold; similarity-based pair selection skipped");
    out.gamma = std::numeric_limits<double>::infinity();
    return out;
  }
  std::vector<double> sims;
  sims.reserve(from_confident.size());
  for (const auto& [i, j] : from_confident) sims.push_back(sim(i, j));
  out.gamma = nearest_rank_quantile(std::move(sims), beta);

  std::vector<IndexPair> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (noisy_labels[static_cast<std::size_t>(i)] == noisy_labels[static_cast<std::size_t>(j)] && sim(i, j) > out.gamma) {
        pairs.emplace_back(i, j);
      }
    }
  }
  out.pairs = PairSet(std::move(pairs));
  return out;
}

PairSet union_pairs(const PairSet& a, const PairSet& b) {
  std::vector<IndexPair> merged;
  merged.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(merged));
  return PairSet(std::move(merged));
}

SelectionState run_selection(const SimilarityMatrix& sim, std::span<const int> noisy_labels,
                             const SelectionInputs& in, PseudoLabelState* pseudo_out) {
  const int k = effective_k(in.k, sim.size());
  PseudoLabelState pseudo = aggregate_pseudo_labels(sim, noisy_labels, in.num_classes, k, in.source);
  SelectionState st;
  st.confident = select_confident_examples(pseudo, noisy_labels, in.num_classes, in.alpha);
  st.confident_all = st.confident.all();
  st.g_prime = build_pairs_from_confident(st.confident, noisy_labels);
  ConfidentPairs cp = select_confident_pairs(sim, noisy_labels, st.g_prime, in.beta);
  st.g_doubleprime = std::move(cp.pairs);
  st.gamma = cp.gamma;
  st.g = union_pairs(st.g_prime, st.g_doubleprime);
  if (pseudo_out) *pseudo_out = std::move(pseudo);
  return st;
}

}  // namespace selcl
