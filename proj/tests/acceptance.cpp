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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances are fixed below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "selcl/harness.hpp"

using namespace selcl;

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kFdTolerance = 1e-4;
constexpr int kFdBatches = 24;
constexpr double kFdSeconds = 30.0;

constexpr int kOracleInstances = 50;
constexpr double kOracleSeconds = 10.0;

constexpr double kNtXentTolerance = 1e-12;

constexpr double kNoSelectionBaseline = 64.0;
constexpr double kPrecisionMargin = 20.0;
constexpr int kBenchmarkSeeds = 10;
constexpr int kBenchmarkRequired = 8;
constexpr double kBenchmarkSeconds = 180.0;

constexpr int kRobustSeeds = 5;
constexpr double kRobustMargin = 5.0;
constexpr double kRobustSeconds = 300.0;

constexpr int kAsymSeeds = 5;
constexpr int kAsymRequired = 4;

constexpr double kSweepSpread = 5.0;

constexpr double kUnitNormTolerance = 1e-6;
constexpr double kRowSumTolerance = 1e-9;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

EmbeddingBank random_bank(int n, int dim, Rng& rng, bool quantise) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> q(-1, 1);
  EmbeddingBank b;
  b.z.resize(n, dim);
  for (int i = 0; i < n; ++i) {
    do {
      for (int k = 0; k < dim; ++k) b.z(i, k) = quantise ? q(rng) : g(rng);
    } while (b.z.row(i).norm() == 0.0);
    b.z.row(i).normalize();
  }
  return b;
}

std::set<oracle::Pair> as_set(const PairSet& p) { return {p.begin(), p.end()}; }

// ------------------------------------------------------------ criterion 1

bool near_kink(const ForwardCache& c) {
  const auto close = [](const Matrix& m) { return m.size() > 0 && m.cwiseAbs().minCoeff() < 1e-4; };
  return close(c.h1_pre) || close(c.v_pre) || close(c.ph_pre);
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  Rng rng = make_rng(101, 0);
  std::uniform_int_distribution<int> nd(2, 6), dd(2, 8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const char* names[] = {"sup", "nt-xent", "mixup", "ce", "sim", "total"};
  double worst[6] = {0, 0, 0, 0, 0, 0};
  int batches = 0;

  while (batches < kFdBatches) {
    const int n = nd(rng);
    const int m = 2 * n;
    const Architecture arch{dd(rng), 5, 3, 3, batches % 2 ? ProjectionKind::kMlp : ProjectionKind::kLinear};
    NetworkParams params = init_params(arch, 500 + static_cast<std::uint64_t>(batches));
    params.visit([&](std::string_view name, std::span<double> t, std::pair<int, int>) {
      if (name.ends_with(".bias")) {
        for (double& b : t) b = 0.2 * (unit(rng) - 0.5);
      }
    });
    const Matrix x = gaussian(m, arch.input_dim, rng);
    const ForwardCache probe = forward(params, x);
    if (near_kink(probe)) continue;

    const std::vector<int> twin = twin_layout(n);
    std::vector<int> origin(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) origin[static_cast<std::size_t>(i)] = i % n;
    std::vector<IndexPair> raw;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (unit(rng) < 0.4) raw.emplace_back(a, b);
      }
    }
    const PairSet pairs(raw);
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> lam(static_cast<std::size_t>(n));
    for (double& l : lam) l = unit(rng);
    std::vector<MixRecord> mix(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      const auto k = static_cast<std::size_t>(i % n);
      mix[static_cast<std::size_t>(i)] = MixRecord{i % n, perm[k], lam[k]};
    }
    std::vector<int> labels(static_cast<std::size_t>(m));
    std::vector<char> use(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      labels[static_cast<std::size_t>(i)] = static_cast<int>(unit(rng) * 3.0) % 3;
      use[static_cast<std::size_t>(i)] = i == 0 || unit(rng) < 0.6;
    }
    const double lambda_c = 0.7, lambda_s = 0.3;

    // Each objective returns its value and fills the upstream partials.
    const std::function<double(const ForwardCache&, Upstream*)> objectives[] = {
        [&](const ForwardCache& c, Upstream* up) {
          auto r = sup_contrastive(ContrastiveBatch{c.z, origin, twin}, pairs, 0.1);
          if (up) up->grad_z = r.grad_z;
          return r.value;
        },
        [&](const ForwardCache& c, Upstream* up) {
          auto r = unsup_contrastive(ContrastiveBatch{c.z, origin, twin}, 0.1);
          if (up) up->grad_z = r.grad_z;
          return r.value;
        },
        [&](const ForwardCache& c, Upstream* up) {
          auto r = mixup_contrastive(MixedBatch{c.z, mix, twin}, pairs, 0.1);
          if (up) up->grad_z = r.grad_z;
          return r.value;
        },
        [&](const ForwardCache& c, Upstream* up) {
          auto r = classification_loss(c.p, labels, use);
          if (up) up->grad_p = r.grad_p;
          return r.value;
        },
        [&](const ForwardCache& c, Upstream* up) {
          auto r = similarity_loss(c.p, origin, pairs);
          if (up) up->grad_p = r.grad_p;
          return r.value;
        },
        [&](const ForwardCache& c, Upstream* up) {
          auto a = mixup_contrastive(MixedBatch{c.z, mix, twin}, pairs, 0.1);
          auto b = classification_loss(c.p, labels, use);
          auto s = similarity_loss(c.p, origin, pairs);
          if (up) {
            up->grad_z = a.grad_z;
            up->grad_p = lambda_c * b.grad_p + lambda_s * s.grad_p;
          }
          return total_loss(a.value, b.value, s.value, lambda_c, lambda_s);
        },
    };
    for (int o = 0; o < 6; ++o) {
      Upstream up;
      objectives[o](probe, &up);
      const NetworkParams analytic = backward(params, probe, up);
      const auto numeric = oracle::numeric_gradient(
          params, [&](const NetworkParams& q) { return objectives[o](forward(q, x), nullptr); }, kFdStep);
      worst[o] = std::max(worst[o], oracle::max_relative_error(analytic, numeric));
    }
    ++batches;
  }
  const double secs = seconds_since(t0);
  bool ok = secs < kFdSeconds;
  std::string detail = std::to_string(batches) + " batches, max rel err";
  for (int o = 0; o < 6; ++o) {
    ok = ok && worst[o] < kFdTolerance;
    detail += std::string(" ") + names[o] + "=" + sci(worst[o]);
  }
  return {ok, detail + " (limit " + sci(kFdTolerance) + ", " + fmt(secs) + " s)"};
}

// ------------------------------------------------------------ criterion 2

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  Rng rng = make_rng(202, 0);
  std::uniform_int_distribution<int> nd(3, 12), cd(2, 3), fd(0, 6);
  const double fractiles[] = {0.0, 0.15, 0.25, 0.35, 0.5, 0.75, 1.0};
  int agree = 0;
  for (int t = 0; t < kOracleInstances; ++t) {
    const int n = nd(rng);
    const int c = cd(rng);
    const EmbeddingBank bank = random_bank(n, 3, rng, t % 4 == 0);
    std::vector<int> noisy(static_cast<std::size_t>(n));
    std::uniform_int_distribution<int> ld(0, c - 1);
    for (int& y : noisy) y = ld(rng);
    const int k = std::uniform_int_distribution<int>(1, n - 1)(rng);
    const double alpha = fractiles[fd(rng)];
    const double beta = fractiles[fd(rng)];

    const SelectionState st = run_selection(SimilarityMatrix(bank), noisy, SelectionInputs{c, k, alpha, beta});
    const oracle::Selection o = oracle::select(bank.z, noisy, c, k, alpha, beta);
    const bool same_gamma = st.gamma == o.gamma;
    if (st.confident.per_class == o.per_class && as_set(st.g_prime) == o.g_prime && same_gamma &&
        as_set(st.g_doubleprime) == o.g_doubleprime && as_set(st.g) == o.g) {
      ++agree;
    }
  }
  const double secs = seconds_since(t0);
  return {agree == kOracleInstances && secs < kOracleSeconds,
          std::to_string(agree) + "/" + std::to_string(kOracleInstances) + " instances identical (" + fmt(secs) +
              " s)"};
}

// ------------------------------------------------------------ criterion 3

Outcome reduction_identities() {
  Rng rng = make_rng(303, 0);
  double nt_gap = 0.0;
  bool mix_exact = true, total_exact = true;
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 5;
    const int m = 2 * n;
    Matrix z = gaussian(m, 4, rng);
    z.rowwise().normalize();
    const std::vector<int> twin = twin_layout(n);
    std::vector<int> origin(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) origin[static_cast<std::size_t>(i)] = i % n;

    const auto sup = sup_contrastive(ContrastiveBatch{z, origin, twin}, PairSet{}, 0.1);
    const double nt = oracle::nt_xent(z, twin, 0.1);
    nt_gap = std::max(nt_gap, std::abs(sup.value - nt));

    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = (i + 1) % n;
    const PairSet pairs(std::vector<IndexPair>{{0, 1}});
    for (double lam : {0.0, 1.0}) {
      std::vector<MixRecord> mix;
      std::vector<int> ident;
      for (int i = 0; i < m; ++i) {
        mix.push_back(MixRecord{i % n, perm[static_cast<std::size_t>(i % n)], lam});
        ident.push_back(mix.back().dominant());
      }
      const auto mixed = mixup_contrastive(MixedBatch{z, mix, twin}, pairs, 0.1);
      const auto pure = sup_contrastive(ContrastiveBatch{z, ident, twin}, pairs, 0.1);
      mix_exact = mix_exact && mixed.value == pure.value && mixed.grad_z == pure.grad_z;
    }

    std::uniform_real_distribution<double> u(0.0, 3.0);
    const double a = u(rng), b = u(rng), c = u(rng), lc = u(rng), ls = u(rng);
    total_exact = total_exact && total_loss(a, b, c, lc, ls) == a + lc * b + ls * c;
  }
  const bool ok = nt_gap <= kNtXentTolerance && mix_exact && total_exact;
  return {ok, "twin-only vs NT-Xent gap " + sci(nt_gap) + ", mixup endpoints " + (mix_exact ? "exact" : "differ") +
                  ", total " + (total_exact ? "exact" : "differs")};
}

// ------------------------------------------------------------ criteria 4-7

double final_precision(const Dataset& ds, const SelectionState& sel, bool pairs_only, const PairSet* pairs) {
  const TrainingView view(ds);
  const SelectionPrecision p = selection_precision(sel.confident_all, pairs ? *pairs : sel.g, view.true_train,
                                                   view.noisy_train);
  return pairs_only ? p.pairs : p.examples;
}

Outcome benchmark_precision() {
  const auto t0 = Clock::now();
  int good = 0;
  std::string per_seed;
  for (int s = 1; s <= kBenchmarkSeeds; ++s) {
    const ConfigFile cf = blob_benchmark(static_cast<std::uint64_t>(s));
    const Dataset ds = cf.data.build();
    const PretrainResult r = pretrain(ds, cf.run);
    const double prec = final_precision(ds, r.final_selection, false, nullptr);
    if (prec >= kNoSelectionBaseline + kPrecisionMargin) ++good;
    per_seed += (per_seed.empty() ? "" : " ") + fmt(prec, 1);
  }
  const double secs = seconds_since(t0);
  return {good >= kBenchmarkRequired && secs < kBenchmarkSeconds,
          std::to_string(good) + "/" + std::to_string(kBenchmarkSeeds) + " seeds with prec_T >= " +
              fmt(kNoSelectionBaseline + kPrecisionMargin, 0) + " [" + per_seed + "] (" + fmt(secs) + " s)"};
}

Outcome robustness_vs_ce() {
  const auto t0 = Clock::now();
  double sum_selcl = 0.0, sum_ce = 0.0;
  for (int s = 1; s <= kRobustSeeds; ++s) {
    const ConfigFile cf = blob_benchmark(static_cast<std::uint64_t>(s));
    const Dataset ds = cf.data.build();
    const RunSummary r = run_experiment(ds, cf.run, true);
    const TrainingView view(ds);
    sum_selcl += r.finetune_test_acc.value_or(0.0);
    sum_ce += classifier_accuracy(train_cross_entropy(ds, cf.run), view.x_test, view.true_test);
  }
  const double a = sum_selcl / kRobustSeeds, b = sum_ce / kRobustSeeds;
  const double secs = seconds_since(t0);
  return {a - b >= kRobustMargin && secs < kRobustSeconds,
          "fine-tuned " + fmt(a) + " vs CE " + fmt(b) + ", gain " + fmt(a - b) + " (need " + fmt(kRobustMargin, 1) + ", " +
              fmt(secs) + " s)"};
}

Outcome asymmetric_pairs() {
  int good = 0;
  std::string per_seed;
  for (int s = 1; s <= kAsymSeeds; ++s) {
    ConfigFile cf = blob_benchmark(static_cast<std::uint64_t>(s));
    cf.data.noise_kind = NoiseKind::kAsymmetric;
    const Dataset ds = cf.data.build();
    const PretrainResult r = pretrain(ds, cf.run);
    const double g = final_precision(ds, r.final_selection, true, &r.final_selection.g);
    const double gp = final_precision(ds, r.final_selection, true, &r.final_selection.g_prime);
    if (g >= gp) ++good;
    per_seed += (per_seed.empty() ? "" : " ") + fmt(g, 1) + "/" + fmt(gp, 1);
  }
  return {good >= kAsymRequired, std::to_string(good) + "/" + std::to_string(kAsymSeeds) +
                                     " seeds with prec(G) >= prec(G') [G/G': " + per_seed + "]"};
}

Outcome lambda_s_sweep() {
  ExperimentPlan plan;
  plan.base = blob_benchmark(1);
  plan.axis = SweepAxis::kLambdaS;
  plan.values = {"0.1", "0.05", "0.01", "0.005", "0.001", "0.0001"};
  const auto rows = summarize(plan, run_plan(plan));
  double lo = 1e300, hi = -1e300;
  bool complete = rows.size() == plan.values.size();
  std::string means;
  for (const auto& r : rows) {
    complete = complete && r.complete();
    if (!r.mean_test_acc) continue;
    lo = std::min(lo, *r.mean_test_acc);
    hi = std::max(hi, *r.mean_test_acc);
    means += (means.empty() ? "" : " ") + fmt(*r.mean_test_acc, 1);
  }
  const double spread = complete ? hi - lo : INFINITY;
  return {complete && spread <= kSweepSpread,
          std::string(complete ? "complete" : "incomplete") + ", means [" + means + "], spread " + fmt(spread) +
              " (limit " + fmt(kSweepSpread, 1) + ")"};
}

// ------------------------------------------------------------ criterion 8

Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "selcl_acceptance_determinism";
  std::filesystem::create_directories(dir);
  const ConfigFile cf = blob_benchmark(4);
  std::string text[2];
  for (int r = 0; r < 2; ++r) {
    const auto path = dir / ("metrics" + std::to_string(r) + ".csv");
    write_metrics_csv(pretrain(cf.data.build(), cf.run).history, path);
    std::ifstream in(path, std::ios::binary);
    text[r].assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  std::filesystem::remove_all(dir);
  return {!text[0].empty() && text[0] == text[1],
          std::to_string(text[0].size()) + " bytes, " + (text[0] == text[1] ? "identical" : "different")};
}

// ------------------------------------------------------------ criterion 9

Outcome invariants() {
  Rng rng = make_rng(909, 0);
  double norm_err = 0.0, row_err = 0.0;
  bool nonneg = true, balanced = true, strict = true, scale_inv = true;
  for (int t = 0; t < 20; ++t) {
    const Architecture arch{6, 8, 4, 3, t % 2 ? ProjectionKind::kMlp : ProjectionKind::kLinear};
    const NetworkParams p = init_params(arch, 900 + static_cast<std::uint64_t>(t));
    const Matrix x = gaussian(25, 6, rng) * std::pow(10.0, t % 5 - 2);
    const ForwardCache c = forward(p, x);
    for (Eigen::Index i = 0; i < c.z.rows(); ++i) {
      if (c.u_norm[i] > 0.0) norm_err = std::max(norm_err, std::abs(c.z.row(i).norm() - 1.0));
    }

    const int n = 30, classes = 3;
    const EmbeddingBank bank = random_bank(n, 4, rng, t % 3 == 0);
    std::vector<int> noisy(static_cast<std::size_t>(n));
    std::uniform_int_distribution<int> ld(0, classes - 1);
    for (int& y : noisy) y = ld(rng);
    const SimilarityMatrix sim(bank);
    for (PosteriorSource src : {PosteriorSource::kPseudoLabels, PosteriorSource::kNoisyLabels}) {
      const PseudoLabelState ps = aggregate_pseudo_labels(sim, noisy, classes, 1 + t % 10, src);
      for (Eigen::Index i = 0; i < ps.posterior.rows(); ++i) {
        row_err = std::max(row_err, std::abs(ps.posterior.row(i).sum() - 1.0));
        nonneg = nonneg && ps.posterior.row(i).minCoeff() >= 0.0;
      }
    }

    const SelectionState st = run_selection(sim, noisy, SelectionInputs{classes, 1 + t % 10, 0.5, 0.25});
    for (int cls = 0; cls < classes; ++cls) {
      const auto pop = static_cast<int>(std::count(noisy.begin(), noisy.end(), cls));
      balanced = balanced &&
                 static_cast<int>(st.confident.per_class[static_cast<std::size_t>(cls)].size()) ==
                     std::min(st.confident.n_sel, pop);
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const bool same = noisy[static_cast<std::size_t>(i)] == noisy[static_cast<std::size_t>(j)];
        const bool above = sim(i, j) > st.gamma;
        strict = strict && st.g_doubleprime.contains(i, j) == (same && above);
      }
    }

    const Matrix ref = gaussian(20, 5, rng), qry = gaussian(6, 5, rng);
    std::vector<int> ref_labels(20);
    for (int& y : ref_labels) y = ld(rng);
    const auto base = weighted_knn_predict(ref, ref_labels, qry, classes, 5, 0.1);
    const double s = std::pow(10.0, t % 7 - 3);
    scale_inv = scale_inv && weighted_knn_predict(ref * s, ref_labels, qry * s, classes, 5, 0.1) == base;
  }
  const bool ok = norm_err <= kUnitNormTolerance && row_err <= kRowSumTolerance && nonneg && balanced && strict &&
                  scale_inv;
  return {ok, "unit-norm err " + sci(norm_err) + ", row-sum err " + sci(row_err) + ", class balance " +
                  (balanced ? "ok" : "broken") + ", strict gamma " + (strict ? "ok" : "broken") + ", KNN scale " +
                  (scale_inv ? "invariant" : "varies")};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"gradient correctness", gradient_check},
      {"selection oracle equivalence", oracle_equivalence},
      {"reduction identities", reduction_identities},
      {"selection quality on noisy blobs", benchmark_precision},
      {"end-to-end robustness vs cross-entropy", robustness_vs_ce},
      {"pair precision under asymmetric noise", asymmetric_pairs},
      {"lambda_s sensitivity sweep", lambda_s_sweep},
      {"determinism", determinism},
      {"invariant suite", invariants},
  };
  int failed = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
