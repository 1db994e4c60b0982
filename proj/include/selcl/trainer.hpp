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
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "selcl/config.hpp"
#include "selcl/evaluation.hpp"
#include "selcl/losses.hpp"
#include "selcl/selection.hpp"

namespace selcl {

/// One row of the metrics CSV. Selection counts and precisions describe the
/// selection used during the epoch; accuracies are measured after it.
struct EpochRecord {
  int epoch = 0;
  double l_mix = 0.0;
  double l_cls = 0.0;
  double l_sim = 0.0;
  double l_all = 0.0;
  std::size_t n_t = 0;
  std::size_t n_gp = 0;
  std::size_t n_gpp = 0;
  double gamma = 0.0;
  double prec_t = 100.0;
  double prec_g = 100.0;
  double knn_acc = 0.0;
  double test_acc = 0.0;
  double seconds = 0.0;

  // Per-step training losses of the epoch, in order. Not written to CSV.
  std::vector<double> step_losses;
};

inline constexpr const char* kMetricsHeader =
    "epoch,L_mix,L_cls,L_sim,L_all,n_T,n_Gp,n_Gpp,gamma,prec_T,prec_G,knn_acc,test_acc,seconds";

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const EpochRecord& r);
void write_metrics_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

/// Train/test views of a dataset in the layout the trainer uses. Selection
/// indices are positions in `train_index` (local train indices).
struct TrainingView {
  std::vector<int> train_index;
  std::vector<int> test_index;
  Matrix x_train;
  Matrix x_test;
  std::vector<int> noisy_train;
  std::vector<int> true_train;
  std::vector<int> true_test;
  int num_classes = 0;

  explicit TrainingView(const Dataset& ds);
};

/// Unit-norm projections of `x` under `params`.
EmbeddingBank embed(const NetworkParams& params, const Matrix& x, int epoch_tag = 0);

/// Percent of rows whose classifier argmax equals `labels`.
double classifier_accuracy(const NetworkParams& params, const Matrix& x, std::span<const int> labels);

/// Owns the parameters and optimizer of one pre-training run.
class Trainer {
 public:
  Trainer(const Dataset& ds, RunConfig cfg);
  Trainer(const Dataset& ds, RunConfig cfg, NetworkParams init);

  /// One epoch of warm-up contrastive training (unsupervised or supervised
  /// on the observed labels).
  EpochRecord warmup_epoch(int epoch);

  /// Refreshes the embedding bank, selects confident examples and pairs, then
  /// trains one epoch on the composite objective. `epoch` must exceed the
  /// warm-up length.
  EpochRecord pretrain_epoch(int epoch);

  /// Selection from the current parameters (local train indices).
  SelectionState select(int epoch_tag = 0, PseudoLabelState* pseudo = nullptr) const;

  const NetworkParams& params() const { return params_; }
  const TrainingView& view() const { return view_; }
  const RunConfig& config() const { return cfg_; }

 private:
  struct BatchViews {
    Matrix x;                 // 2N x D unmixed views
    std::vector<int> origin;  // local train index per view
  };

  std::vector<std::vector<int>> epoch_batches(Rng& rng) const;
  BatchViews make_views(const std::vector<int>& batch, const AugmentationSpec& aug, Rng& rng) const;
  double contrastive_step(const BatchViews& views, const PairSet* pairs);
  void finish_record(EpochRecord& rec) const;

  RunConfig cfg_;
  TrainingView view_;
  NetworkParams params_;
  OptState opt_;
  std::optional<PairSet> label_pairs_;  // supervised warm-up positives
};

/// Runs `warmup_epochs` epochs of warm-up from `params`.
NetworkParams warmup(NetworkParams params, const Dataset& ds, const RunConfig& cfg,
                     std::vector<EpochRecord>* history = nullptr);

struct PretrainResult {
  NetworkParams params;
  std::vector<EpochRecord> history;
  SelectionState final_selection;  // recomputed from the final parameters
};

/// Called after every epoch, e.g. to write checkpoints.
using EpochHook = std::function<void(const Trainer&, const EpochRecord&)>;

/// Warm-up for epochs 1..warmup_epochs, then selective training up to
/// max_epochs. The history has one record per epoch.
PretrainResult pretrain(const Dataset& ds, const RunConfig& cfg, const EpochHook& hook = {});

/// Classifier network for the second stage: keeps the encoder, attaches a
/// fresh classifier head (unless retraining is disabled) and trains on the
/// confident examples with cross-entropy and weak augmentation.
NetworkParams finetune(const NetworkParams& pretrained, const Dataset& ds, const RunConfig& cfg,
                       const SelectionState& selection);

/// Baseline: the same network trained from scratch with plain cross-entropy
/// on every observed train label for max_epochs + finetune_epochs epochs.
NetworkParams train_cross_entropy(const Dataset& ds, const RunConfig& cfg);

struct RunSummary {
  std::vector<EpochRecord> history;
  NetworkParams pretrained;
  std::optional<NetworkParams> finetuned;
  SelectionState selection;
  double pretrain_test_acc = 0.0;
  double knn_acc = 0.0;
  std::optional<double> finetune_test_acc;
  SelectionPrecision precision;
};

/// Pre-training, optionally followed by fine-tuning, with final metrics.
RunSummary run_experiment(const Dataset& ds, const RunConfig& cfg, bool with_finetune, const EpochHook& hook = {});

}  // namespace selcl
