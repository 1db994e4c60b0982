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

#include "selcl/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>

#include "selcl/io_util.hpp"

namespace selcl {

std::vector<int> Dataset::train_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == Split::kTrain) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> Dataset::test_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == Split::kTest) out.push_back(static_cast<int>(i));
  }
  return out;
}

void Dataset::validate() const {
  const std::size_t n = true_labels.size();
  if (static_cast<std::size_t>(instances.rows()) != n || noisy_labels.size() != n ||
      split.size() != n) {
    throw InvalidArgument("dataset: field lengths disagree");
  }
  if (num_classes < 1) throw InvalidArgument("dataset: num_classes must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    if (true_labels[i] < 0 || true_labels[i] >= num_classes || noisy_labels[i] < 0 ||
        noisy_labels[i] >= num_classes) {
      throw InvalidArgument("dataset: label out of range at example " + std::to_string(i));
    }
    if (split[i] == Split::kTest && noisy_labels[i] != true_labels[i]) {
      throw InvalidArgument("dataset: test example " + std::to_string(i) + " carries label noise");
    }
  }
}

bool Dataset::operator==(const Dataset& other) const {
  return num_classes == other.num_classes && instances.rows() == other.instances.rows() &&
         instances.cols() == other.instances.cols() && instances == other.instances &&
         true_labels == other.true_labels && noisy_labels == other.noisy_labels &&
         split == other.split;
}

void AugmentationSpec::validate() const {
  if (!(jitter_sigma >= 0.0)) throw InvalidArgument("augmentation: jitter_sigma must be >= 0");
  if (!(drop_prob >= 0.0 && drop_prob <= 1.0)) {
    throw InvalidArgument("augmentation: drop_prob must lie in [0, 1]");
  }
  if (!(scale_lo > 0.0 && scale_lo <= scale_hi)) {
    throw InvalidArgument("augmentation: scale range must be a positive interval");
  }
}

Dataset make_blobs(int n, int num_classes, int dim, double cluster_spread, std::uint64_t seed) {
  if (num_classes < 2 || n < num_classes) {
    throw InvalidArgument("make_blobs: need n >= classes >= 2");
  }
  if (dim < 2) throw InvalidArgument("make_blobs: need dim >= 2");
  if (!(cluster_spread > 0.0)) throw InvalidArgument("make_blobs: cluster_spread must be positive");

  Rng rng = make_rng(seed, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::MatrixXd centers(num_classes, dim);
  for (int c = 0; c < num_classes; ++c) {
    for (int d = 0; d < dim; ++d) centers(c, d) = gauss(rng);
  }

  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % num_classes;
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset ds;
  ds.num_classes = num_classes;
  ds.instances.resize(n, dim);
  ds.true_labels = labels;
  ds.noisy_labels = labels;
  ds.split.assign(static_cast<std::size_t>(n), Split::kTrain);

  // Every fifth occurrence of a class goes to the test split.
  std::vector<int> seen(static_cast<std::size_t>(num_classes), 0);
  for (int i = 0; i < n; ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    for (int d = 0; d < dim; ++d) ds.instances(i, d) = centers(c, d) + cluster_spread * gauss(rng);
    if (seen[static_cast<std::size_t>(c)]++ % 5 == 4) ds.split[static_cast<std::size_t>(i)] = Split::kTest;
  }
  return ds;
}

Dataset inject_noise(const Dataset& ds, const NoiseSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate <= 1.0)) {
    throw InvalidArgument("inject_noise: rate must lie in [0, 1]");
  }
  const int C = ds.num_classes;
  Dataset out = ds;
  Rng rng = make_rng(spec.rng_seed, 1);
  std::vector<int> train = ds.train_indices();

  if (spec.kind == NoiseKind::kSymmetric) {
    const auto m = static_cast<std::size_t>(std::llround(spec.rate * static_cast<double>(train.size())));
    std::shuffle(train.begin(), train.end(), rng);
    std::uniform_int_distribution<int> any_class(0, C - 1);
    for (std::size_t k = 0; k < m; ++k) {
      out.noisy_labels[static_cast<std::size_t>(train[k])] = any_class(rng);
    }
    return out;
  }

  std::vector<int> flip(static_cast<std::size_t>(C));
  if (spec.asym_map) {
    if (spec.asym_map->size() != static_cast<std::size_t>(C)) {
      throw InvalidArgument("inject_noise: asym_map must have one entry per class");
    }
    for (int target : *spec.asym_map) {
      if (target < 0 || target >= C) throw InvalidArgument("inject_noise: asym_map target out of range");
    }
    flip = *spec.asym_map;
  } else {
    if (C < 2) throw InvalidArgument("inject_noise: asymmetric noise needs at least 2 classes");
    for (int c = 0; c < C; ++c) flip[static_cast<std::size_t>(c)] = (c + 1) % C;
  }
  std::bernoulli_distribution coin(spec.rate);
  for (int i : train) {
    if (coin(rng)) {
      auto& label = out.noisy_labels[static_cast<std::size_t>(i)];
      label = flip[static_cast<std::size_t>(label)];
    }
  }
  return out;
}

Eigen::VectorXd augment(const Eigen::Ref<const Eigen::VectorXd>& x, const AugmentationSpec& spec,
                        Rng& rng) {
  Eigen::VectorXd out = x;
  if (spec.jitter_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.jitter_sigma);
    for (Eigen::Index d = 0; d < out.size(); ++d) out[d] += noise(rng);
  }
  if (spec.drop_prob > 0.0) {
    std::bernoulli_distribution drop(spec.drop_prob);
    for (Eigen::Index d = 0; d < out.size(); ++d) {
      if (drop(rng)) out[d] = 0.0;
    }
  }
  if (spec.scale_hi > spec.scale_lo) {
    std::uniform_real_distribution<double> scale(spec.scale_lo, spec.scale_hi);
    out *= scale(rng);
  } else if (spec.scale_lo != 1.0) {
    out *= spec.scale_lo;
  }
  return out;
}

double sample_beta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  if (x + y == 0.0) return 0.5;  // both underflowed; only possible for tiny shapes
  return x / (x + y);
}

MixupResult mixup_with_lambda(const Eigen::Ref<const Eigen::VectorXd>& x_a,
                              const Eigen::Ref<const Eigen::VectorXd>& x_b, double lambda) {
  if (x_a.size() != x_b.size()) throw DimensionMismatch("mixup: inputs differ in dimension");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("mixup: lambda must lie in [0, 1]");
  MixupResult r;
  r.lambda = lambda;
  r.mixed = lambda * x_a + (1.0 - lambda) * x_b;
  r.dominant = lambda >= 0.5 ? Dominant::kA : Dominant::kB;
  return r;
}

MixupResult mixup_combine(const Eigen::Ref<const Eigen::VectorXd>& x_a,
                          const Eigen::Ref<const Eigen::VectorXd>& x_b, double alpha_m, Rng& rng) {
  if (!(alpha_m > 0.0)) throw InvalidArgument("mixup: alpha_m must be positive");
  return mixup_with_lambda(x_a, x_b, sample_beta(alpha_m, alpha_m, rng));
}

namespace {

std::string_view split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

}  // namespace

Dataset load_features_csv(const std::filesystem::path& path, std::optional<int> num_classes) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file " + path.string(), 0);
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[header.size() - 3] != "true_label" ||
      header[header.size() - 2] != "noisy_label" || header.back() != "split") {
    throw ParseError("bad header in " + path.string(), 0);
  }
  const std::size_t dim = header.size() - 3;

  std::vector<double> values;
  Dataset ds;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != dim + 3) {
      throw DimensionMismatch("row " + std::to_string(row) + ": expected " +
                              std::to_string(dim + 3) + " fields, got " +
                              std::to_string(fields.size()));
    }
    for (std::size_t d = 0; d < dim; ++d) {
      const auto v = parse_double(fields[d]);
      if (!v) throw ParseError("row " + std::to_string(row) + ": bad number '" + std::string(fields[d]) + "'", row);
      values.push_back(*v);
    }
    const auto t = parse_int(fields[dim]);
    const auto y = parse_int(fields[dim + 1]);
    if (!t || !y) throw ParseError("row " + std::to_string(row) + ": bad label", row);
    ds.true_labels.push_back(*t);
    ds.noisy_labels.push_back(*y);
    if (fields[dim + 2] == "train") {
      ds.split.push_back(Split::kTrain);
    } else if (fields[dim + 2] == "test") {
      ds.split.push_back(Split::kTest);
    } else {
      throw ParseError("row " + std::to_string(row) + ": split must be train or test", row);
    }
  }

  int max_label = -1;
  for (std::size_t i = 0; i < ds.true_labels.size(); ++i) {
    const std::size_t r = i + 1;
    const int t = ds.true_labels[i];
    const int y = ds.noisy_labels[i];
    if (t < 0 || y < 0 || (num_classes && (t >= *num_classes || y >= *num_classes))) {
      throw LabelOutOfRange("row " + std::to_string(r) + ": label out of range", r);
    }
    max_label = std::max({max_label, t, y});
  }
  ds.num_classes = num_classes ? *num_classes : max_label + 1;

  const auto n = static_cast<Eigen::Index>(ds.true_labels.size());
  ds.instances.resize(n, static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      ds.instances(i, static_cast<Eigen::Index>(d)) = values[static_cast<std::size_t>(i) * dim + d];
    }
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.split[i] == Split::kTest && ds.noisy_labels[i] != ds.true_labels[i]) {
      throw ParseError("row " + std::to_string(i + 1) + ": test rows must have noisy_label == true_label", i + 1);
    }
  }
  return ds;
}

void dump_features_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (int d = 0; d < ds.dim(); ++d) out << "feature_" << d << ',';
  out << "true_label,noisy_label,split\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (int d = 0; d < ds.dim(); ++d) out << format_double(ds.instances(static_cast<Eigen::Index>(i), d)) << ',';
    out << ds.true_labels[i] << ',' << ds.noisy_labels[i] << ',' << split_name(ds.split[i]) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace selcl
