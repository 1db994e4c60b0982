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

#include "selcl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "selcl/io_util.hpp"

namespace selcl {

namespace {

// Independent RNG streams per phase so that changing one phase's length does
// not shift the draws of another.
constexpr std::uint64_t kWarmupStream = 1000;
constexpr std::uint64_t kPretrainStream = 2000;
constexpr std::uint64_t kFinetuneStream = 5000;
constexpr std::uint64_t kBaselineStream = 7000;
constexpr std::uint64_t kHeadSeedOffset = 0x5e1c1;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::vector<int>> shuffled_batches(std::vector<int> order, int batch_size, Rng& rng) {
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> out;
  for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(batch_size)) {
    const std::size_t e = std::min(order.size(), s + static_cast<std::size_t>(batch_size));
    if (e - s < 2) break;  // a single example has no contrastive partner
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s), order.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return out;
}

Matrix weak_views(const Matrix& x, const std::vector<int>& rows, const AugmentationSpec& aug, Rng& rng) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = augment(x.row(rows[k]).transpose(), aug, rng).transpose();
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void write_metrics_header(std::ostream& out) { out << kMetricsHeader << '\n'; }

void write_metrics_row(std::ostream& out, const EpochRecord& r) {
  out << r.epoch << ',' << format_double(r.l_mix) << ',' << format_double(r.l_cls) << ',' << format_double(r.l_sim)
      << ',' << format_double(r.l_all) << ',' << r.n_t << ',' << r.n_gp << ',' << r.n_gpp << ','
      << format_double(r.gamma) << ',' << format_double(r.prec_t) << ',' << format_double(r.prec_g) << ','
      << format_double(r.knn_acc) << ',' << format_double(r.test_acc) << ',' << format_double(r.seconds) << '\n';
}

void write_metrics_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_metrics_header(out);
  for (const auto& r : history) write_metrics_row(out, r);
  if (!out) throw Error("write failed: " + path.string());
}

TrainingView::TrainingView(const Dataset& ds) : num_classes(ds.num_classes) {
  ds.validate();
  train_index = ds.train_indices();
  test_index = ds.test_indices();
  x_train.resize(static_cast<Eigen::Index>(train_index.size()), ds.dim());
  x_test.resize(static_cast<Eigen::Index>(test_index.size()), ds.dim());
  for (std::size_t k = 0; k < train_index.size(); ++k) {
    const auto i = static_cast<std::size_t>(train_index[k]);
    x_train.row(static_cast<Eigen::Index>(k)) = ds.instances.row(static_cast<Eigen::Index>(i));
    noisy_train.push_back(ds.noisy_labels[i]);
    true_train.push_back(ds.true_labels[i]);
  }
  for (std::size_t k = 0; k < test_index.size(); ++k) {
    const auto i = static_cast<std::size_t>(test_index[k]);
    x_test.row(static_cast<Eigen::Index>(k)) = ds.instances.row(static_cast<Eigen::Index>(i));
    true_test.push_back(ds.true_labels[i]);
  }
}

EmbeddingBank embed(const NetworkParams& params, const Matrix& x, int epoch_tag) {
  EmbeddingBank bank;
  bank.z = forward(params, x).z;
  bank.epoch_tag = epoch_tag;
  return bank;
}

double classifier_accuracy(const NetworkParams& params, const Matrix& x, std::span<const int> labels) {
  if (x.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
  return accuracy_percent(predict_classes(forward(params, x).p), labels);
}

Trainer::Trainer(const Dataset& ds, RunConfig cfg)
    : Trainer(ds, cfg, init_params(cfg.architecture(ds.dim(), ds.num_classes), cfg.seed)) {}

Trainer::Trainer(const Dataset& ds, RunConfig cfg, NetworkParams init)
    : cfg_(std::move(cfg)), view_(ds), params_(std::move(init)) {
  cfg_.validate();
  if (view_.train_index.size() < 2) throw InvalidArgument("trainer: need at least two training examples");
  if (params_.enc1.in_dim() != ds.dim() || params_.cls.out_dim() != ds.num_classes) {
    throw DimensionMismatch("trainer: network shape does not match the dataset");
  }
  opt_ = make_opt_state(params_, cfg_.lr, cfg_.momentum, cfg_.weight_decay, cfg_.lr_schedule);
}

std::vector<std::vector<int>> Trainer::epoch_batches(Rng& rng) const {
  std::vector<int> order(view_.train_index.size());
  std::iota(order.begin(), order.end(), 0);
  return shuffled_batches(std::move(order), cfg_.batch_size, rng);
}

Trainer::BatchViews Trainer::make_views(const std::vector<int>& batch, const AugmentationSpec& aug, Rng& rng) const {
  const auto n = static_cast<Eigen::Index>(batch.size());
  BatchViews v;
  v.x.resize(2 * n, view_.x_train.cols());
  v.origin.resize(static_cast<std::size_t>(2 * n));
  for (int view = 0; view < 2; ++view) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const int o = batch[static_cast<std::size_t>(k)];
      v.x.row(view * n + k) = augment(view_.x_train.row(o).transpose(), aug, rng).transpose();
      v.origin[static_cast<std::size_t>(view * n + k)] = o;
    }
  }
  return v;
}

double Trainer::contrastive_step(const BatchViews& views, const PairSet* pairs) {
  const ForwardCache cache = forward(params_, views.x);
  ContrastiveBatch cb{cache.z, views.origin, twin_layout(static_cast<int>(views.origin.size() / 2))};
  const ContrastiveResult r = pairs ? sup_contrastive(cb, *pairs, cfg_.tau) : unsup_contrastive(cb, cfg_.tau);
  sgd_step(params_, opt_, backward(params_, cache, Upstream{r.grad_z, {}, {}}));
  return r.value;
}

SelectionState Trainer::select(int epoch_tag, PseudoLabelState* pseudo) const {
  const SimilarityMatrix sim(embed(params_, view_.x_train, epoch_tag));
  SelectionInputs in;
  in.num_classes = view_.num_classes;
  in.k = cfg_.k;
  in.alpha = cfg_.alpha;
  in.beta = cfg_.beta;
  in.source = cfg_.posterior_source;
  SelectionState st = run_selection(sim, view_.noisy_train, in, pseudo);
  st.epoch_tag = epoch_tag;
  return st;
}

void Trainer::finish_record(EpochRecord& rec) const {
  rec.l_all = mean_of(rec.step_losses);
  if (view_.x_test.rows() == 0) {
    rec.knn_acc = rec.test_acc = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  const Matrix z_train = embed(params_, view_.x_train).z;
  const Matrix z_test = embed(params_, view_.x_test).z;
  std::vector<int> reference = view_.noisy_train;
  if (cfg_.knn_labels == KnnLabelSource::kPseudo) {
    const SimilarityMatrix sim(EmbeddingBank{z_train, rec.epoch});
    reference = aggregate_pseudo_labels(sim, view_.noisy_train, view_.num_classes,
                                        effective_k(cfg_.k, sim.size()))
                    .pseudo_labels;
  }
  const int k_eval = std::min(cfg_.k_eval, static_cast<int>(z_train.rows()));
  rec.knn_acc = weighted_knn_eval(z_train, reference, z_test, view_.true_test, view_.num_classes, k_eval, cfg_.tau_knn);
  rec.test_acc = classifier_accuracy(params_, view_.x_test, view_.true_test);
}

EpochRecord Trainer::warmup_epoch(int epoch) {
  const auto t0 = Clock::now();
  opt_.set_epoch(epoch);
  Rng rng = make_rng(cfg_.seed, kWarmupStream + static_cast<std::uint64_t>(epoch));

  const PairSet* pairs = nullptr;
  if (cfg_.warmup_kind == WarmupKind::kSupervised) {
    if (!label_pairs_) {
      std::vector<IndexPair> same;
      const auto n = static_cast<int>(view_.noisy_train.size());
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          if (view_.noisy_train[static_cast<std::size_t>(i)] == view_.noisy_train[static_cast<std::size_t>(j)]) {
            same.emplace_back(i, j);
          }
        }
      }
      label_pairs_ = PairSet(std::move(same));
    }
    pairs = &*label_pairs_;
  }

  EpochRecord rec;
  rec.epoch = epoch;
  rec.gamma = std::numeric_limits<double>::infinity();
  for (const auto& batch : epoch_batches(rng)) {
    const BatchViews views = make_views(batch, cfg_.strong_augmentation(), rng);
    rec.step_losses.push_back(contrastive_step(views, pairs));
  }
  rec.l_mix = mean_of(rec.step_losses);
  finish_record(rec);
  rec.seconds = cfg_.record_wall_time ? seconds_since(t0) : 0.0;
  return rec;
}

EpochRecord Trainer::pretrain_epoch(int epoch) {
  if (epoch <= cfg_.warmup_epochs) {
    throw InvalidArgument("pretrain_epoch: epoch " + std::to_string(epoch) + " is still in warm-up");
  }
  const auto t0 = Clock::now();
  opt_.set_epoch(epoch);
  Rng rng = make_rng(cfg_.seed, kPretrainStream + static_cast<std::uint64_t>(epoch));

  const SelectionState sel = select(epoch);
  EpochRecord rec;
  rec.epoch = epoch;
  rec.n_t = sel.confident_all.size();
  rec.n_gp = sel.g_prime.size();
  rec.n_gpp = sel.g_doubleprime.size();
  rec.gamma = sel.gamma;
  const SelectionPrecision prec = selection_precision(sel.confident_all, sel.g, view_.true_train, view_.noisy_train);
  rec.prec_t = prec.examples;
  rec.prec_g = prec.pairs;

  if (sel.confident_all.empty()) {
    spdlog::warn("epoch {}: no confident examples selected; falling back to unsupervised contrastive training", epoch);
    for (const auto& batch : epoch_batches(rng)) {
      const BatchViews views = make_views(batch, cfg_.strong_augmentation(), rng);
      rec.step_losses.push_back(contrastive_step(views, nullptr));
    }
    rec.l_mix = mean_of(rec.step_losses);
    finish_record(rec);
    rec.seconds = cfg_.record_wall_time ? seconds_since(t0) : 0.0;
    return rec;
  }

  std::vector<char> confident(view_.train_index.size(), 0);
  for (int i : sel.confident_all) confident[static_cast<std::size_t>(i)] = 1;

  std::vector<double> mix_losses, cls_losses, sim_losses;
  for (const auto& batch : epoch_batches(rng)) {
    const BatchViews views = make_views(batch, cfg_.strong_augmentation(), rng);
    const int n = static_cast<int>(batch.size());

    // Mix each example with a partner from the same batch; both views of a
    // mixed example share the partner and lambda.
    std::vector<int> partner(static_cast<std::size_t>(n));
    std::iota(partner.begin(), partner.end(), 0);
    std::shuffle(partner.begin(), partner.end(), rng);
    MixedBatch mixed;
    mixed.twin = twin_layout(n);
    mixed.mix.resize(static_cast<std::size_t>(2 * n));
    Matrix x_mixed(2 * n, views.x.cols());
    for (int k = 0; k < n; ++k) {
      const double lambda = sample_beta(cfg_.alpha_m, cfg_.alpha_m, rng);
      const int pk = partner[static_cast<std::size_t>(k)];
      for (int view = 0; view < 2; ++view) {
        const int row = view * n + k;
        const int other = view * n + pk;
        x_mixed.row(row) = mixup_with_lambda(views.x.row(row).transpose(), views.x.row(other).transpose(), lambda)
                               .mixed.transpose();
        mixed.mix[static_cast<std::size_t>(row)] =
            MixRecord{views.origin[static_cast<std::size_t>(row)], views.origin[static_cast<std::size_t>(other)], lambda};
      }
    }
    const ForwardCache mixed_cache = forward(params_, x_mixed);
    mixed.z = mixed_cache.z;
    const ContrastiveResult mix = mixup_contrastive(mixed, sel.g, cfg_.tau);

    const ForwardCache plain_cache = forward(params_, views.x);
    std::vector<int> labels(views.origin.size());
    std::vector<char> use(views.origin.size());
    for (std::size_t r = 0; r < views.origin.size(); ++r) {
      const auto o = static_cast<std::size_t>(views.origin[r]);
      labels[r] = view_.noisy_train[o];
      use[r] = confident[o];
    }
    const HeadResult cls = classification_loss(plain_cache.p, labels, use);
    const HeadResult sim = similarity_loss(plain_cache.p, views.origin, sel.g);
    const double l_all = total_loss(mix.value, cls.value, sim.value, cfg_.lambda_c, cfg_.lambda_s);

    NetworkParams grads = backward(params_, mixed_cache, Upstream{mix.grad_z, {}, {}});
    const Matrix grad_p = cfg_.lambda_c * cls.grad_p + cfg_.lambda_s * sim.grad_p;
    accumulate(grads, backward(params_, plain_cache, Upstream{{}, grad_p, {}}));
    sgd_step(params_, opt_, grads);

    mix_losses.push_back(mix.value);
    cls_losses.push_back(cls.value);
    sim_losses.push_back(sim.value);
    rec.step_losses.push_back(l_all);
  }
  rec.l_mix = mean_of(mix_losses);
  rec.l_cls = mean_of(cls_losses);
  rec.l_sim = mean_of(sim_losses);
  finish_record(rec);
  rec.seconds = cfg_.record_wall_time ? seconds_since(t0) : 0.0;
  spdlog::debug("epoch {}: |T|={} |G'|={} |G''|={} prec_T={:.2f} prec_G={:.2f} knn={:.2f} test={:.2f}", epoch,
                rec.n_t, rec.n_gp, rec.n_gpp, rec.prec_t, rec.prec_g, rec.knn_acc, rec.test_acc);
  return rec;
}

NetworkParams warmup(NetworkParams params, const Dataset& ds, const RunConfig& cfg, std::vector<EpochRecord>* history) {
  Trainer t(ds, cfg, std::move(params));
  for (int e = 1; e <= cfg.warmup_epochs; ++e) {
    EpochRecord r = t.warmup_epoch(e);
    if (history) history->push_back(std::move(r));
  }
  return t.params();
}

PretrainResult pretrain(const Dataset& ds, const RunConfig& cfg, const EpochHook& hook) {
  Trainer t(ds, cfg);
  PretrainResult out;
  for (int e = 1; e <= cfg.max_epochs; ++e) {
    out.history.push_back(e <= cfg.warmup_epochs ? t.warmup_epoch(e) : t.pretrain_epoch(e));
    if (hook) hook(t, out.history.back());
  }
  out.params = t.params();
  out.final_selection = t.select(cfg.max_epochs + 1);
  return out;
}

NetworkParams finetune(const NetworkParams& pretrained, const Dataset& ds, const RunConfig& cfg,
                       const SelectionState& selection) {
  cfg.validate();
  const TrainingView view(ds);
  if (selection.confident_all.empty()) {
    throw Error("fine-tuning needs confident examples but none were selected; lower alpha");
  }
  NetworkParams params = pretrained;
  if (cfg.finetune_retrain_head) {
    params.cls = init_classifier_head(cfg.hidden_dim, ds.num_classes, cfg.seed ^ kHeadSeedOffset);
  }
  OptState opt = make_opt_state(params, cfg.finetune_lr, cfg.momentum, cfg.weight_decay);
  const double encoder_scale = cfg.finetune_freeze_encoder ? 0.0 : cfg.finetune_encoder_scale;
  const AugmentationSpec aug = cfg.weak_augmentation();

  for (int epoch = 1; epoch <= cfg.finetune_epochs; ++epoch) {
    Rng rng = make_rng(cfg.seed, kFinetuneStream + static_cast<std::uint64_t>(epoch));
    for (const auto& batch : shuffled_batches(selection.confident_all, cfg.batch_size, rng)) {
      const ForwardCache cache = forward(params, weak_views(view.x_train, batch, aug, rng));
      std::vector<int> labels;
      for (int i : batch) labels.push_back(view.noisy_train[static_cast<std::size_t>(i)]);
      const std::vector<char> use(batch.size(), 1);
      const HeadResult ce = classification_loss(cache.p, labels, use);
      sgd_step_scaled(params, opt, backward(params, cache, Upstream{{}, ce.grad_p, {}}), encoder_scale, false);
    }
  }
  return params;
}

NetworkParams train_cross_entropy(const Dataset& ds, const RunConfig& cfg) {
  cfg.validate();
  const TrainingView view(ds);
  NetworkParams params = init_params(cfg.architecture(ds.dim(), ds.num_classes), cfg.seed);
  OptState opt = make_opt_state(params, cfg.lr, cfg.momentum, cfg.weight_decay, cfg.lr_schedule);
  const AugmentationSpec aug = cfg.weak_augmentation();
  std::vector<int> all(view.train_index.size());
  std::iota(all.begin(), all.end(), 0);

  const int epochs = cfg.max_epochs + cfg.finetune_epochs;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    opt.set_epoch(epoch);
    Rng rng = make_rng(cfg.seed, kBaselineStream + static_cast<std::uint64_t>(epoch));
    for (const auto& batch : shuffled_batches(all, cfg.batch_size, rng)) {
      const ForwardCache cache = forward(params, weak_views(view.x_train, batch, aug, rng));
      std::vector<int> labels;
      for (int i : batch) labels.push_back(view.noisy_train[static_cast<std::size_t>(i)]);
      const std::vector<char> use(batch.size(), 1);
      const HeadResult ce = classification_loss(cache.p, labels, use);
      sgd_step(params, opt, backward(params, cache, Upstream{{}, ce.grad_p, {}}));
    }
  }
  return params;
}

RunSummary run_experiment(const Dataset& ds, const RunConfig& cfg, bool with_finetune, const EpochHook& hook) {
  PretrainResult pre = pretrain(ds, cfg, hook);
  const TrainingView view(ds);
  RunSummary s;
  s.history = std::move(pre.history);
  s.pretrained = std::move(pre.params);
  s.selection = std::move(pre.final_selection);
  s.pretrain_test_acc = classifier_accuracy(s.pretrained, view.x_test, view.true_test);
  s.knn_acc = s.history.empty() ? 0.0 : s.history.back().knn_acc;
  s.precision = selection_precision(s.selection.confident_all, s.selection.g, view.true_train, view.noisy_train);
  if (with_finetune) {
    s.finetuned = finetune(s.pretrained, ds, cfg, s.selection);
    s.finetune_test_acc = classifier_accuracy(*s.finetuned, view.x_test, view.true_test);
  }
  return s;
}

}  // namespace selcl
