/*
 * Copyright 2026 The relstab Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "relstab/neighborhood.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.h"
#include "relstab/data.h"

namespace relstab {
namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

oracle::FunctionPredictor constant_model(Eigen::Index d) {
  return oracle::FunctionPredictor(d, 2, [](const Vector&) { return vec2(1.0, 0.0); });
}

TEST(Sample, ConstantModelAcceptsEverything) {
  const auto p = constant_model(3);
  const Neighborhood nb = sample_neighborhood(p, Vector::Ones(3), 25, {}, {}, 1);
  EXPECT_EQ(nb.size(), 25);
  EXPECT_EQ(nb.attempts, 25);
  EXPECT_EQ(nb.anchor_label, 0);
}

TEST(Sample, ZeroNoiseRepeatsAnchor) {
  const auto p = constant_model(3);
  NeighborhoodParams params;
  params.stddev = 0.0;
  params.p_flip = 0.0;
  Vector x(3);
  x << 0.5, 1.0, 0.0;
  const Neighborhood nb = sample_neighborhood(p, x, 5, {false, true, true}, params, 3);
  for (Eigen::Index k = 0; k < nb.size(); ++k) EXPECT_EQ(nb.point(k), x);
}

TEST(Sample, BinaryFeaturesOnlyFlip) {
  const auto p = constant_model(2);
  NeighborhoodParams params;
  params.p_flip = 0.5;
  const Neighborhood nb = sample_neighborhood(p, vec2(0.3, 1.0), 400, {false, true}, params, 4);
  int flips = 0;
  for (Eigen::Index k = 0; k < nb.size(); ++k) {
    const double b = nb.points(k, 1);
    EXPECT_TRUE(b == 0.0 || b == 1.0);
    flips += b == 0.0 ? 1 : 0;
  }
  EXPECT_GT(flips, 150);
  EXPECT_LT(flips, 250);
}

TEST(Sample, LabelPreserving) {
  std::mt19937_64 rng(7);
  const ModelPredictor p(oracle::random_mlp(2, 10, 2, rng));
  NeighborhoodParams params;
  params.stddev = 0.5;
  const Neighborhood nb = sample_neighborhood(p, vec2(0.1, -0.1), 50, {}, params, 9);
  for (Eigen::Index k = 0; k < nb.size(); ++k) EXPECT_EQ(p.predict(nb.point(k)), nb.anchor_label);
}

TEST(Sample, LogisticFarFromBoundaryAcceptsAlmostAll) {
  Vector w(2);
  w << 1.0, 1.0;
  const ModelPredictor p(oracle::binary_logistic(w, 0.0));
  const Neighborhood nb = sample_neighborhood(p, vec2(0.2, 0.2), 10000, {}, {}, 5);
  EXPECT_GT(10000.0 / nb.attempts, 0.99);
}

TEST(Sample, ExhaustionReportsCounts) {
  // Every candidate flips the label: class 0 only at the exact anchor.
  const oracle::FunctionPredictor p(2, 2, [](const Vector& x) {
    return x.squaredNorm() == 0.0 ? vec2(1.0, 0.0) : vec2(0.0, 1.0);
  });
  NeighborhoodParams params;
  params.max_attempts = 30;
  try {
    sample_neighborhood(p, Vector::Zero(2), 5, {}, params, 1);
    FAIL() << "expected AcceptanceExhausted";
  } catch (const AcceptanceExhausted& e) {
    EXPECT_EQ(e.accepted_so_far(), 0);
    EXPECT_EQ(e.attempts(), 30);
  }
}

TEST(Sample, SeedDeterminism) {
  std::mt19937_64 rng(8);
  const ModelPredictor p(oracle::random_mlp(3, 10, 2, rng));
  const Vector x = oracle::random_vector(3, rng);
  EXPECT_EQ(sample_neighborhood(p, x, 20, {}, {}, 11).points,
            sample_neighborhood(p, x, 20, {}, {}, 11).points);
  EXPECT_NE(sample_neighborhood(p, x, 20, {}, {}, 11).points,
            sample_neighborhood(p, x, 20, {}, {}, 12).points);
}

TEST(Sample, RejectsBadArguments) {
  const auto p = constant_model(2);
  EXPECT_THROW(sample_neighborhood(p, Vector::Zero(3), 5, {}, {}, 1), InvalidInput);
  EXPECT_THROW(sample_neighborhood(p, Vector::Zero(2), 0, {}, {}, 1), InvalidInput);
  EXPECT_THROW(sample_neighborhood(p, Vector::Zero(2), 5, {true}, {}, 1), InvalidInput);
}

TEST(Distance, HandExamples) {
  EXPECT_EQ(perturbation_distance(vec2(1, 2), vec2(1, 2), NormOrder::kL2), 0.0);
  EXPECT_DOUBLE_EQ(perturbation_distance(vec2(0, 0), vec2(3, 4), NormOrder::kL2), 5.0);
  EXPECT_DOUBLE_EQ(perturbation_distance(vec2(0, 0), vec2(3, 4), NormOrder::kLinf), 4.0);
  EXPECT_DOUBLE_EQ(perturbation_distance(vec2(0, 0), vec2(3, 4), NormOrder::kL1), 7.0);
}

TEST(Distance, RealizedPerRow) {
  const auto p = constant_model(2);
  const Neighborhood nb = sample_neighborhood(p, vec2(0, 0), 4, {}, {}, 2);
  const Vector d = realized_distances(nb, NormOrder::kL2);
  ASSERT_EQ(d.size(), 4);
  for (Eigen::Index k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(d[k], nb.point(k).norm());
}

TEST(Dump, AnchorRowFirst) {
  const auto p = constant_model(2);
  const Neighborhood nb = sample_neighborhood(p, vec2(0.5, -0.5), 3, {}, {}, 2);
  const auto path = std::filesystem::temp_directory_path() / "relstab_nb_test.csv";
  write_neighborhood_csv(path, nb);
  std::ifstream in(path);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  int rows = 1;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 4);
  EXPECT_EQ(first, "anchor,0.5,-0.5");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace relstab
