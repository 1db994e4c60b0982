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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "selcl/datagen.hpp"

using namespace selcl;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("selcl_test_" + name);
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::vector<int> class_counts(const std::vector<int>& labels, int c) {
  std::vector<int> n(static_cast<std::size_t>(c), 0);
  for (int y : labels) ++n[static_cast<std::size_t>(y)];
  return n;
}

}  // namespace

TEST_CASE("make_blobs balances classes and splits 80/20") {
  const Dataset ds = make_blobs(10, 2, 2, 0.1, 1);
  CHECK(ds.size() == 10);
  CHECK(class_counts(ds.true_labels, 2) == std::vector<int>{5, 5});
  CHECK(ds.train_indices().size() == 8);
  CHECK(ds.test_indices().size() == 2);
  CHECK(ds.noisy_labels == ds.true_labels);
  CHECK_NOTHROW(ds.validate());
}

TEST_CASE("make_blobs with n equal to C gives one example per class") {
  const Dataset ds = make_blobs(4, 4, 2, 1.0, 3);
  CHECK(class_counts(ds.true_labels, 4) == std::vector<int>{1, 1, 1, 1});
}

TEST_CASE("make_blobs keeps clusters tighter than their separation") {
  const Dataset ds = make_blobs(1000, 10, 16, 0.5, 7);
  double within = 0.0, between = 0.0;
  long nw = 0, nb = 0;
  for (std::size_t i = 0; i < ds.size(); i += 3) {
    for (std::size_t j = i + 1; j < ds.size(); j += 7) {
      const double d = (ds.instances.row(static_cast<Eigen::Index>(i)) - ds.instances.row(static_cast<Eigen::Index>(j))).norm();
      if (ds.true_labels[i] == ds.true_labels[j]) {
        within += d;
        ++nw;
      } else {
        between += d;
        ++nb;
      }
    }
  }
  REQUIRE(nw > 0);
  REQUIRE(nb > 0);
  CHECK(within / nw < between / nb);
}

TEST_CASE("make_blobs rejects bad arguments") {
  CHECK_THROWS_AS(make_blobs(3, 4, 2, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(make_blobs(10, 2, 2, 0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(make_blobs(10, 2, 2, -1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(make_blobs(10, 1, 2, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(make_blobs(10, 2, 1, 1.0, 1), InvalidArgument);
}

TEST_CASE("make_blobs is deterministic in its seed") {
  CHECK(make_blobs(50, 3, 4, 1.0, 9) == make_blobs(50, 3, 4, 1.0, 9));
  CHECK_FALSE(make_blobs(50, 3, 4, 1.0, 9) == make_blobs(50, 3, 4, 1.0, 10));
}

TEST_CASE("symmetric noise at rate zero changes nothing") {
  const Dataset ds = make_blobs(200, 4, 3, 1.0, 2);
  const Dataset noisy = inject_noise(ds, NoiseSpec{NoiseKind::kSymmetric, 0.0, std::nullopt, 5});
  CHECK(noisy.noisy_labels == noisy.true_labels);
}

TEST_CASE("asymmetric default map flips class c to c+1") {
  const Dataset ds = make_blobs(400, 4, 3, 1.0, 2);
  const Dataset noisy = inject_noise(ds, NoiseSpec{NoiseKind::kAsymmetric, 0.4, std::nullopt, 5});
  int flipped = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (noisy.noisy_labels[i] != noisy.true_labels[i]) {
      ++flipped;
      CHECK(noisy.noisy_labels[i] == (noisy.true_labels[i] + 1) % 4);
    }
  }
  CHECK(flipped > 0);
}

TEST_CASE("asymmetric noise honours an explicit map") {
  const Dataset ds = make_blobs(300, 3, 3, 1.0, 4);
  const Dataset noisy = inject_noise(ds, NoiseSpec{NoiseKind::kAsymmetric, 1.0, std::vector<int>{2, 1, 0}, 1});
  for (int i : ds.train_indices()) {
    const auto k = static_cast<std::size_t>(i);
    const int expect = std::vector<int>{2, 1, 0}[static_cast<std::size_t>(ds.true_labels[k])];
    CHECK(noisy.noisy_labels[k] == expect);
  }
}

TEST_CASE("symmetric mismatch fraction matches r(C-1)/C") {
  const Dataset ds = make_blobs(12500, 10, 2, 1.0, 11);
  const Dataset noisy = inject_noise(ds, NoiseSpec{NoiseKind::kSymmetric, 0.4, std::nullopt, 3});
  const auto train = noisy.train_indices();
  REQUIRE(train.size() == 10000);
  int mismatched = 0;
  for (int i : train) mismatched += noisy.noisy_labels[static_cast<std::size_t>(i)] != noisy.true_labels[static_cast<std::size_t>(i)];
  CHECK(std::abs(mismatched / 10000.0 - 0.36) < 0.015);
}

TEST_CASE("noise touches only train labels and is deterministic") {
  const Dataset ds = make_blobs(300, 3, 4, 1.0, 8);
  const NoiseSpec spec{NoiseKind::kSymmetric, 0.5, std::nullopt, 21};
  const Dataset a = inject_noise(ds, spec);
  const Dataset b = inject_noise(ds, spec);
  CHECK(a.noisy_labels == b.noisy_labels);
  CHECK(a.instances == ds.instances);
  CHECK(a.true_labels == ds.true_labels);
  for (int i : ds.test_indices()) CHECK(a.noisy_labels[static_cast<std::size_t>(i)] == ds.true_labels[static_cast<std::size_t>(i)]);
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("noise rejects rates outside [0, 1]") {
  const Dataset ds = make_blobs(20, 2, 2, 1.0, 1);
  CHECK_THROWS_AS(inject_noise(ds, NoiseSpec{NoiseKind::kSymmetric, 1.5, std::nullopt, 1}), InvalidArgument);
  CHECK_THROWS_AS(inject_noise(ds, NoiseSpec{NoiseKind::kSymmetric, -0.1, std::nullopt, 1}), InvalidArgument);
}

TEST_CASE("augment with the identity spec is the identity") {
  Rng rng = make_rng(1, 0);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, -1.0, 2.0);
  CHECK(augment(x, AugmentationSpec{}, rng) == x);
}

TEST_CASE("augment with certain dropout gives zero") {
  Rng rng = make_rng(1, 0);
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(4);
  CHECK(augment(x, AugmentationSpec{0.3, 1.0, 0.5, 2.0}, rng).isZero());
}

TEST_CASE("jittered views average back to the input") {
  Rng rng = make_rng(2, 0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  x[0] = 1.0;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(4);
  const AugmentationSpec spec{0.1, 0.0, 1.0, 1.0};
  Eigen::VectorXd first = augment(x, spec, rng);
  Eigen::VectorXd second = augment(x, spec, rng);
  CHECK_FALSE(first == second);
  for (int t = 0; t < 10000; ++t) sum += augment(x, spec, rng);
  CHECK(((sum / 10000.0) - x).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("mixup boundary and tie cases") {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  const MixupResult one = mixup_with_lambda(a, b, 1.0);
  CHECK(one.mixed == a);
  CHECK(one.dominant == Dominant::kA);
  const MixupResult half = mixup_with_lambda(a, b, 0.5);
  CHECK(half.mixed[0] == 0.5);
  CHECK(half.mixed[1] == 0.5);
  CHECK(half.dominant == Dominant::kA);
  CHECK(mixup_with_lambda(a, b, 0.2).dominant == Dominant::kB);
  CHECK_THROWS_AS(mixup_with_lambda(a, b, 1.2), InvalidArgument);
}

TEST_CASE("mixup with alpha 1 draws uniform lambda") {
  Rng rng = make_rng(3, 0);
  Eigen::VectorXd a = Eigen::VectorXd::Ones(2), b = Eigen::VectorXd::Zero(2);
  double sum = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const MixupResult r = mixup_combine(a, b, 1.0, rng);
    CHECK(r.lambda >= 0.0);
    CHECK(r.lambda <= 1.0);
    CHECK(r.mixed[0] == doctest::Approx(r.lambda));
    sum += r.lambda;
  }
  CHECK(std::abs(sum / 10000.0 - 0.5) < 0.02);
  CHECK_THROWS_AS(mixup_combine(a, b, 0.0, rng), InvalidArgument);
}

TEST_CASE("feature CSV round-trips exactly") {
  const Dataset ds = inject_noise(make_blobs(60, 3, 5, 0.7, 4), NoiseSpec{NoiseKind::kSymmetric, 0.3, std::nullopt, 2});
  const auto path = temp_file("roundtrip.csv");
  dump_features_csv(ds, path);
  CHECK(load_features_csv(path, 3) == ds);
  std::filesystem::remove(path);
}

TEST_CASE("feature CSV loader parses a small file and reports bad rows") {
  const auto path = temp_file("small.csv");
  write_text(path, "feature_0,feature_1,true_label,noisy_label,split\n0.5,1,0,1,train\n-2,3e-1,1,1,test\n");
  const Dataset ds = load_features_csv(path);
  CHECK(ds.size() == 2);
  CHECK(ds.num_classes == 2);
  CHECK(ds.instances(1, 1) == 0.3);
  CHECK(ds.split[1] == Split::kTest);

  write_text(path, "feature_0,feature_1,true_label,noisy_label,split\n0.5,1,0,1,train\n0.5,1,0,2,train\n");
  try {
    (void)load_features_csv(path, 2);
    FAIL("expected LabelOutOfRange");
  } catch (const LabelOutOfRange& e) {
    CHECK(e.row() == 2);
  }

  write_text(path, "feature_0,feature_1,true_label,noisy_label,split\n0.5,abc,0,1,train\n");
  try {
    (void)load_features_csv(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 1);
  }

  write_text(path, "feature_0,feature_1,true_label,noisy_label,split\n0.5,1,0,1,train\n0.5,0,1,train\n");
  CHECK_THROWS_AS(load_features_csv(path), DimensionMismatch);
  std::filesystem::remove(path);
}
