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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "selcl/common.hpp"

namespace selcl {

/// Row-major batches: one example per row.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Affine map y = W x + b, W is (out x in).
struct Dense {
  Matrix weight;
  Vector bias;

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }
};

enum class ProjectionKind : std::uint8_t { kLinear, kMlp };

struct Architecture {
  int input_dim = 2;
  int hidden_dim = 64;
  int proj_dim = 32;
  int num_classes = 2;
  ProjectionKind projection = ProjectionKind::kLinear;
};

/// Encoder D->H->H (ReLU after each layer) producing v, a projection head
/// producing unit-norm z, and a softmax classifier head producing p.
/// The MLP projection inserts an H->H ReLU layer before the H->P map.
struct NetworkParams {
  Dense enc1;
  Dense enc2;
  std::optional<Dense> proj_hidden;
  Dense proj;
  Dense cls;

  Architecture architecture() const;

  /// Visits every tensor in a fixed order with a stable name. Weight and bias
  /// storage is contiguous, so each tensor is exposed as a flat span.
  template <typename F>
  void visit(F&& fn) {
    visit_dense("enc1", enc1, fn);
    visit_dense("enc2", enc2, fn);
    if (proj_hidden) visit_dense("proj_hidden", *proj_hidden, fn);
    visit_dense("proj", proj, fn);
    visit_dense("cls", cls, fn);
  }
  template <typename F>
  void visit(F&& fn) const {
    const_cast<NetworkParams*>(this)->visit([&](std::string_view name, std::span<double> data,
                                                std::pair<int, int> shape) {
      fn(name, std::span<const double>(data), shape);
    });
  }

  std::size_t parameter_count() const;

 private:
  template <typename F>
  static void visit_dense(std::string_view layer, Dense& d, F& fn) {
    const std::string w = std::string(layer) + ".weight";
    const std::string b = std::string(layer) + ".bias";
    fn(std::string_view(w), std::span<double>(d.weight.data(), static_cast<std::size_t>(d.weight.size())),
       std::pair<int, int>{d.out_dim(), d.in_dim()});
    fn(std::string_view(b), std::span<double>(d.bias.data(), static_cast<std::size_t>(d.bias.size())),
       std::pair<int, int>{d.out_dim(), 1});
  }
};

/// He-style N(0, 2/fan_in) weights and zero biases.
NetworkParams init_params(const Architecture& arch, std::uint64_t seed);

/// Same shapes as `like`, every entry zero.
NetworkParams zeros_like(const NetworkParams& like);

/// Fresh classifier head for an existing encoder.
Dense init_classifier_head(int hidden_dim, int num_classes, std::uint64_t seed);

struct ForwardCache {
  Matrix input;
  Matrix h1_pre, h1;
  Matrix v_pre, v;
  Matrix ph_pre, ph;  // only for the MLP projection
  Matrix u;           // projection output before normalization
  Vector u_norm;
  Matrix z;
  Matrix logits;
  Matrix p;

  int batch_size() const { return static_cast<int>(input.rows()); }
};

ForwardCache forward(const NetworkParams& params, const Eigen::Ref<const Matrix>& batch);

/// Upstream partials of a scalar loss. Empty matrices mean zero.
struct Upstream {
  Matrix grad_z;
  Matrix grad_p;
  Matrix grad_v;
};

/// Exact gradient of the scalar loss with respect to every parameter, given
/// its partials on z, p and v for the batch in `cache`.
NetworkParams backward(const NetworkParams& params, const ForwardCache& cache, const Upstream& up);

/// Adds `src` into `dst` tensor by tensor.
void accumulate(NetworkParams& dst, const NetworkParams& src);

/// Gradient of z = u / |u| pulled back to u, for one row.
Vector normalize_backward(const Eigen::Ref<const Vector>& z, double u_norm,
                          const Eigen::Ref<const Vector>& grad_z);

/// Gradient of p = softmax(logits) pulled back to the logits, for one row.
Vector softmax_backward(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& grad_p);

struct LrMilestone {
  int epoch = 0;
  double factor = 1.0;
};

/// SGD with classical momentum; weight decay enters the momentum buffer.
struct OptState {
  NetworkParams momentum_buffer;
  double base_lr = 0.1;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::vector<LrMilestone> schedule;

  /// Learning rate for 1-based `epoch`: base_lr times the factor of every
  /// milestone already completed (milestone < epoch). A milestone at 125
  /// lowers the rate from epoch 126 on.
  void set_epoch(int epoch);
};

OptState make_opt_state(const NetworkParams& params, double lr, double momentum, double weight_decay,
                        std::vector<LrMilestone> schedule = {});

/// v <- momentum*v + grad + weight_decay*param; param <- param - lr*v.
/// Throws NumericalError naming the tensor if a parameter becomes non-finite.
void sgd_step(NetworkParams& params, OptState& opt, const NetworkParams& grads);

/// Fine-tuning variant: encoder tensors move at `encoder_scale` times the
/// learning rate (0 freezes them), the classifier at the full rate, and the
/// projection head only when `update_projection` is set.
void sgd_step_scaled(NetworkParams& params, OptState& opt, const NetworkParams& grads,
                     double encoder_scale, bool update_projection);

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path);
NetworkParams load_checkpoint(const std::filesystem::path& path);

/// Argmax of each row of p, smallest index on ties.
std::vector<int> predict_classes(const Matrix& p);

}  // namespace selcl
