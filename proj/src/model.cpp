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

#include "selcl/model.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace selcl {

namespace {

constexpr double kNormFloor = 1e-12;
constexpr int kCheckpointVersion = 1;

Dense he_dense(int in, int out, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / static_cast<double>(in)));
  Dense d;
  d.weight.resize(out, in);
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < in; ++c) d.weight(r, c) = gauss(rng);
  }
  d.bias = Vector::Zero(out);
  return d;
}

Dense zero_dense(const Dense& like) {
  return Dense{Matrix::Zero(like.weight.rows(), like.weight.cols()), Vector::Zero(like.bias.size())};
}

Matrix affine(const Eigen::Ref<const Matrix>& x, const Dense& d) {
  Matrix out = x * d.weight.transpose();
  out.rowwise() += d.bias.transpose();
  return out;
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix relu_mask(const Matrix& grad, const Matrix& pre) {
  return grad.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
}

void affine_backward(const Matrix& grad_out, const Matrix& input, Dense& grad) {
  grad.weight.noalias() += grad_out.transpose() * input;
  grad.bias += grad_out.colwise().sum().transpose();
}

bool is_encoder(std::string_view name) { return name.starts_with("enc"); }
bool is_projection(std::string_view name) { return name.starts_with("proj"); }

}  // namespace

Architecture NetworkParams::architecture() const {
  Architecture a;
  a.input_dim = enc1.in_dim();
  a.hidden_dim = enc1.out_dim();
  a.proj_dim = proj.out_dim();
  a.num_classes = cls.out_dim();
  a.projection = proj_hidden ? ProjectionKind::kMlp : ProjectionKind::kLinear;
  return a;
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t total = 0;
  visit([&](std::string_view, std::span<const double> data, std::pair<int, int>) { total += data.size(); });
  return total;
}

NetworkParams init_params(const Architecture& arch, std::uint64_t seed) {
  if (arch.input_dim < 1 || arch.hidden_dim < 1 || arch.proj_dim < 1 || arch.num_classes < 1) {
    throw InvalidArgument("init_params: all dimensions must be positive");
  }
  Rng rng = make_rng(seed, 10);
  NetworkParams p;
  p.enc1 = he_dense(arch.input_dim, arch.hidden_dim, rng);
  p.enc2 = he_dense(arch.hidden_dim, arch.hidden_dim, rng);
  if (arch.projection == ProjectionKind::kMlp) p.proj_hidden = he_dense(arch.hidden_dim, arch.hidden_dim, rng);
  p.proj = he_dense(arch.hidden_dim, arch.proj_dim, rng);
  p.cls = he_dense(arch.hidden_dim, arch.num_classes, rng);
  return p;
}

Dense init_classifier_head(int hidden_dim, int num_classes, std::uint64_t seed) {
  Rng rng = make_rng(seed, 11);
  return he_dense(hidden_dim, num_classes, rng);
}

NetworkParams zeros_like(const NetworkParams& like) {
  NetworkParams z;
  z.enc1 = zero_dense(like.enc1);
  z.enc2 = zero_dense(like.enc2);
  if (like.proj_hidden) z.proj_hidden = zero_dense(*like.proj_hidden);
  z.proj = zero_dense(like.proj);
  z.cls = zero_dense(like.cls);
  return z;
}

ForwardCache forward(const NetworkParams& params, const Eigen::Ref<const Matrix>& batch) {
  if (batch.cols() != params.enc1.in_dim()) {
    throw DimensionMismatch("forward: input has " + std::to_string(batch.cols()) +
                            " features, network expects " + std::to_string(params.enc1.in_dim()));
  }
  ForwardCache c;
  c.input = batch;
  c.h1_pre = affine(batch, params.enc1);
  c.h1 = relu(c.h1_pre);
  c.v_pre = affine(c.h1, params.enc2);
  c.v = relu(c.v_pre);

  if (params.proj_hidden) {
    c.ph_pre = affine(c.v, *params.proj_hidden);
    c.ph = relu(c.ph_pre);
    c.u = affine(c.ph, params.proj);
  } else {
    c.u = affine(c.v, params.proj);
  }
  c.u_norm = c.u.rowwise().norm();
  c.z.resize(c.u.rows(), c.u.cols());
  for (Eigen::Index i = 0; i < c.u.rows(); ++i) {
    c.z.row(i) = c.u.row(i) / std::max(c.u_norm[i], kNormFloor);
  }

  c.logits = affine(c.v, params.cls);
  c.p.resize(c.logits.rows(), c.logits.cols());
  for (Eigen::Index i = 0; i < c.logits.rows(); ++i) {
    const double m = c.logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (c.logits.row(i).array() - m).exp().matrix();
    c.p.row(i) = e / e.sum();
  }
  return c;
}

Vector normalize_backward(const Eigen::Ref<const Vector>& z, double u_norm,
                          const Eigen::Ref<const Vector>& grad_z) {
  return (grad_z - z * z.dot(grad_z)) / std::max(u_norm, kNormFloor);
}

Vector softmax_backward(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& grad_p) {
  return p.cwiseProduct(grad_p.array().matrix() - Vector::Constant(p.size(), p.dot(grad_p)));
}

NetworkParams backward(const NetworkParams& params, const ForwardCache& cache, const Upstream& up) {
  const Eigen::Index B = cache.input.rows();
  const auto check = [B](const Matrix& m, Eigen::Index cols, const char* what) {
    if (m.size() != 0 && (m.rows() != B || m.cols() != cols)) {
      throw DimensionMismatch(std::string("backward: upstream ") + what + " has the wrong shape");
    }
  };
  check(up.grad_z, cache.z.cols(), "grad_z");
  check(up.grad_p, cache.p.cols(), "grad_p");
  check(up.grad_v, cache.v.cols(), "grad_v");

  NetworkParams g = zeros_like(params);
  Matrix grad_v = up.grad_v.size() ? up.grad_v : Matrix::Zero(B, cache.v.cols());

  if (up.grad_p.size()) {
    Matrix grad_logits(B, cache.p.cols());
    for (Eigen::Index i = 0; i < B; ++i) {
      grad_logits.row(i) = softmax_backward(cache.p.row(i).transpose(), up.grad_p.row(i).transpose()).transpose();
    }
    affine_backward(grad_logits, cache.v, g.cls);
    grad_v.noalias() += grad_logits * params.cls.weight;
  }

  if (up.grad_z.size()) {
    Matrix grad_u(B, cache.u.cols());
    for (Eigen::Index i = 0; i < B; ++i) {
      grad_u.row(i) =
          normalize_backward(cache.z.row(i).transpose(), cache.u_norm[i], up.grad_z.row(i).transpose()).transpose();
    }
    if (params.proj_hidden) {
      affine_backward(grad_u, cache.ph, g.proj);
      const Matrix grad_ph_pre = relu_mask(grad_u * params.proj.weight, cache.ph_pre);
      affine_backward(grad_ph_pre, cache.v, *g.proj_hidden);
      grad_v.noalias() += grad_ph_pre * params.proj_hidden->weight;
    } else {
      affine_backward(grad_u, cache.v, g.proj);
      grad_v.noalias() += grad_u * params.proj.weight;
    }
  }

  const Matrix grad_v_pre = relu_mask(grad_v, cache.v_pre);
  affine_backward(grad_v_pre, cache.h1, g.enc2);
  const Matrix grad_h1_pre = relu_mask(grad_v_pre * params.enc2.weight, cache.h1_pre);
  affine_backward(grad_h1_pre, cache.input, g.enc1);
  return g;
}

void accumulate(NetworkParams& dst, const NetworkParams& src) {
  std::vector<std::span<const double>> parts;
  src.visit([&](std::string_view, std::span<const double> data, std::pair<int, int>) { parts.push_back(data); });
  std::size_t k = 0;
  dst.visit([&](std::string_view, std::span<double> data, std::pair<int, int>) {
    const auto s = parts.at(k++);
    if (s.size() != data.size()) throw DimensionMismatch("accumulate: tensor shapes differ");
    for (std::size_t j = 0; j < data.size(); ++j) data[j] += s[j];
  });
  if (k != parts.size()) throw DimensionMismatch("accumulate: tensor lists differ");
}

void OptState::set_epoch(int epoch) {
  lr = base_lr;
  for (const auto& m : schedule) {
    if (m.epoch < epoch) lr *= m.factor;
  }
}

OptState make_opt_state(const NetworkParams& params, double lr, double momentum, double weight_decay,
                        std::vector<LrMilestone> schedule) {
  OptState s;
  s.momentum_buffer = zeros_like(params);
  s.base_lr = lr;
  s.lr = lr;
  s.momentum = momentum;
  s.weight_decay = weight_decay;
  s.schedule = std::move(schedule);
  return s;
}

void sgd_step_scaled(NetworkParams& params, OptState& opt, const NetworkParams& grads, double encoder_scale,
                     bool update_projection) {
  std::vector<std::span<const double>> g_parts;
  grads.visit([&](std::string_view, std::span<const double> d, std::pair<int, int>) { g_parts.push_back(d); });
  std::vector<std::span<double>> m_parts;
  opt.momentum_buffer.visit([&](std::string_view, std::span<double> d, std::pair<int, int>) { m_parts.push_back(d); });
  if (g_parts.size() != m_parts.size()) throw DimensionMismatch("sgd_step: gradient tensors do not match");

  std::size_t k = 0;
  params.visit([&](std::string_view name, std::span<double> w, std::pair<int, int>) {
    const auto g = g_parts.at(k);
    auto m = m_parts.at(k);
    ++k;
    if (g.size() != w.size() || m.size() != w.size()) {
      throw DimensionMismatch("sgd_step: shape mismatch in " + std::string(name));
    }
    double scale = 1.0;
    if (is_encoder(name)) scale = encoder_scale;
    if (is_projection(name) && !update_projection) scale = 0.0;
    if (scale == 0.0) return;
    const double lr = opt.lr * scale;
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = opt.momentum * m[j] + g[j] + opt.weight_decay * w[j];
      w[j] -= lr * m[j];
    }
    for (double x : w) {
      if (!std::isfinite(x)) throw NumericalError("non-finite value in parameter tensor " + std::string(name));
    }
  });
}

void sgd_step(NetworkParams& params, OptState& opt, const NetworkParams& grads) {
  sgd_step_scaled(params, opt, grads, 1.0, true);
}

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "selcl-checkpoint";
  j["version"] = kCheckpointVersion;
  const Architecture a = params.architecture();
  j["architecture"] = {{"input_dim", a.input_dim},
                       {"hidden_dim", a.hidden_dim},
                       {"proj_dim", a.proj_dim},
                       {"num_classes", a.num_classes},
                       {"projection", a.projection == ProjectionKind::kMlp ? "mlp" : "linear"}};
  nlohmann::json tensors = nlohmann::json::array();
  params.visit([&](std::string_view name, std::span<const double> data, std::pair<int, int> shape) {
    tensors.push_back({{"name", std::string(name)},
                       {"shape", {shape.first, shape.second}},
                       {"data", std::vector<double>(data.begin(), data.end())}});
  });
  j["tensors"] = std::move(tensors);
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

NetworkParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what(), 0);
  }
  if (j.value("format", "") != "selcl-checkpoint") throw ParseError("not a selcl checkpoint: " + path.string(), 0);
  if (j.value("version", 0) != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version in " + path.string(), 0);
  }
  try {
    const auto& ja = j.at("architecture");
    Architecture a;
    a.input_dim = ja.at("input_dim").get<int>();
    a.hidden_dim = ja.at("hidden_dim").get<int>();
    a.proj_dim = ja.at("proj_dim").get<int>();
    a.num_classes = ja.at("num_classes").get<int>();
    a.projection = ja.at("projection").get<std::string>() == "mlp" ? ProjectionKind::kMlp : ProjectionKind::kLinear;
    NetworkParams p = zeros_like(init_params(a, 0));
    const auto& tensors = j.at("tensors");
    std::size_t k = 0;
    p.visit([&](std::string_view name, std::span<double> data, std::pair<int, int> shape) {
      const auto& t = tensors.at(k++);
      if (t.at("name").get<std::string>() != name) {
        throw ParseError("checkpoint tensor order mismatch at " + std::string(name), 0);
      }
      const auto s = t.at("shape").get<std::vector<int>>();
      if (s.size() != 2 || s[0] != shape.first || s[1] != shape.second) {
        throw DimensionMismatch("checkpoint tensor " + std::string(name) + " has the wrong shape");
      }
      const auto values = t.at("data").get<std::vector<double>>();
      if (values.size() != data.size()) throw DimensionMismatch("checkpoint tensor " + std::string(name) + " is truncated");
      std::copy(values.begin(), values.end(), data.begin());
    });
    if (k != tensors.size()) throw ParseError("checkpoint has extra tensors", 0);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what(), 0);
  }
}

std::vector<int> predict_classes(const Matrix& p) {
  std::vector<int> out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < p.cols(); ++c) {
      if (p(i, c) > p(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace selcl
