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

#include "relstab/model.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "relstab/data.h"

namespace relstab {
namespace {

TEST(Forward, LogisticHandExample) {
  Vector w(2);
  w << 1.0, -1.0;
  const ModelArtifact m = oracle::binary_logistic(w, 0.0);
  Vector x(2);
  x << 2.0, 1.0;
  const ForwardTrace t = forward(m, x);
  EXPECT_DOUBLE_EQ(t.logits[1] - t.logits[0], 1.0);
  EXPECT_NEAR(t.probs[1], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(t.probs[1], 0.73106, 1e-5);
  EXPECT_EQ(t.predicted, 1);
}

TEST(Forward, ZeroMlpIsUniform) {
  ModelArtifact m = init_model(ModelKind::kMlp, 3, 2, 4, 1);
  m.w1.setZero();
  m.b1.setZero();
  m.w2.setZero();
  m.b2.setZero();
  const ForwardTrace t = forward(m, Vector::Ones(3));
  EXPECT_DOUBLE_EQ(t.probs[0], 0.5);
  EXPECT_DOUBLE_EQ(t.probs[1], 0.5);
  EXPECT_EQ(t.predicted, 0);
}

TEST(Forward, SoftmaxShiftInvariance) {
  Vector z(3);
  z << 0.3, 2.0, -1.0;
  const Vector shifted = (z.array() + 1000.0).matrix();
  EXPECT_EQ(argmax(softmax(z)), argmax(softmax(shifted)));
  EXPECT_TRUE(softmax(z).isApprox(softmax(shifted), 1e-12));
}

TEST(Forward, MatchesNaiveLoops) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ModelArtifact m = oracle::random_mlp(4, 7, 3, rng);
    const Vector x = oracle::random_vector(4, rng);
    const ForwardTrace t = forward(m, x);
    for (Label c = 0; c < 3; ++c) {
      EXPECT_NEAR(t.logits[c], oracle::naive_logit(m, oracle::to_vec(x), c), 1e-12);
    }
  }
}

TEST(Gradient, LogisticIsWeightRow) {
  std::mt19937_64 rng(5);
  ModelArtifact m = init_model(ModelKind::kLogistic, 4, 3, 0, 9);
  const Vector x = oracle::random_vector(4, rng);
  for (Label c = 0; c < 3; ++c) {
    EXPECT_EQ(input_gradient(m, x, c), Vector(m.w1.row(c).transpose()));
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  int checked = 0;
  while (checked < 50) {
    const ModelArtifact m = oracle::random_mlp(5, 16, 2, rng);
    const Vector x = oracle::random_vector(5, rng);
    if (oracle::kink_margin(m, x) < 1e-3) continue;
    const ModelPredictor p(m);
    for (Label c = 0; c < 2; ++c) {
      const Vector g = p.input_gradient(x, c);
      const Vector fd = finite_diff_gradient(p, x, c, 1e-5);
      for (Eigen::Index i = 0; i < 5; ++i) {
        EXPECT_LE(std::fabs(g[i] - fd[i]), 1e-4 * std::max(std::fabs(g[i]), 1e-6) + 1e-9);
      }
    }
    ++checked;
  }
}

TEST(Gradient, DeadReluRegionIsZero) {
  ModelArtifact m = init_model(ModelKind::kMlp, 3, 2, 5, 2);
  m.w1.setOnes();
  m.b1.setConstant(-10.0);
  EXPECT_EQ(input_gradient(m, Vector::Zero(3), 1), Vector::Zero(3));
}

TEST(FiniteDiff, QuadraticScorer) {
  const oracle::FunctionPredictor sq(1, 1, [](const Vector& x) {
    Vector out(1);
    out[0] = x[0] * x[0];
    return out;
  });
  Vector x(1);
  x[0] = 1.0;
  EXPECT_NEAR(finite_diff_gradient(sq, x, 0, 1e-5)[0], 2.0, 1e-8);
}

TEST(FiniteDiff, LogisticExact) {
  const ModelArtifact m = init_model(ModelKind::kLogistic, 3, 2, 0, 4);
  const ModelPredictor p(m);
  Vector x(3);
  x << 0.1, -0.7, 1.3;
  const Vector fd = finite_diff_gradient(p, x, 1, 1e-5);
  EXPECT_TRUE(fd.isApprox(Vector(m.w1.row(1).transpose()), 1e-8));
}

TEST(FiniteDiff, SecondOrderConvergence) {
  // A smooth test double: analytic gradient known in closed form.
  const oracle::FunctionPredictor smooth(2, 1, [](const Vector& x) {
    Vector out(1);
    out[0] = std::sin(x[0]) * std::exp(x[1]);
    return out;
  });
  Vector x(2);
  x << 0.4, -0.3;
  const double exact = std::cos(x[0]) * std::exp(x[1]);
  const double e1 = std::fabs(finite_diff_gradient(smooth, x, 0, 1e-2)[0] - exact);
  const double e2 = std::fabs(finite_diff_gradient(smooth, x, 0, 5e-3)[0] - exact);
  EXPECT_NEAR(e1 / e2, 4.0, 0.2);
}

TEST(Representation, LogisticIsLogits) {
  const ModelArtifact m = init_model(ModelKind::kLogistic, 2, 2, 0, 3);
  Vector x(2);
  x << 0.5, 0.25;
  EXPECT_EQ(representation(m, x), forward(m, x).logits);
}

TEST(Representation, IdentityLayer) {
  ModelArtifact m = init_model(ModelKind::kMlp, 3, 2, 3, 3);
  m.w1 = Matrix::Identity(3, 3);
  m.b1.setZero();
  Vector x(3);
  x << -1.0, 0.0, 2.5;
  EXPECT_EQ(representation(m, x), x);
}

TEST(Train, SeparableBlobsReachPerfectValidation) {
  const Dataset ds = make_blobs(500, 2, 5.0, 0.5, 21);
  const Splits s = split(ds, {0.8, 0.1, 0.1}, 1);
  const Standardizer st = fit_standardizer(s.train);
  const ModelArtifact init = init_model(ModelKind::kLogistic, 2, 2, 0, 5);
  const ModelArtifact m = train(init, s.train.standardized(st), s.val.standardized(st), TrainConfig{});
  EXPECT_DOUBLE_EQ(m.training.best_val_accuracy, 1.0);
  EXPECT_GE(m.training.best_epoch, 1);
}

TEST(Train, ZeroEpochsKeepsInit) {
  const Dataset ds = make_circles(100, 0.05, 0.5, 1);
  const Splits s = split(ds, {0.8, 0.1, 0.1}, 1);
  const ModelArtifact init = init_model(ModelKind::kMlp, 2, 2, 8, 5);
  TrainConfig cfg;
  cfg.epochs = 0;
  const ModelArtifact m = train(init, s.train, s.val, cfg);
  EXPECT_EQ(m.w1, init.w1);
  EXPECT_EQ(m.w2, init.w2);
  EXPECT_EQ(m.training.best_epoch, -1);
}

TEST(Train, BitwiseDeterministic) {
  const Dataset ds = make_circles(200, 0.05, 0.5, 1);
  const Splits s = split(ds, {0.8, 0.1, 0.1}, 1);
  const ModelArtifact init = init_model(ModelKind::kMlp, 2, 2, 16, 5);
  TrainConfig cfg;
  cfg.epochs = 5;
  const ModelArtifact a = train(init, s.train, s.val, cfg);
  const ModelArtifact b = train(init, s.train, s.val, cfg);
  EXPECT_EQ(a.w1, b.w1);
  EXPECT_EQ(a.b1, b.b1);
  EXPECT_EQ(a.w2, b.w2);
  EXPECT_EQ(a.b2, b.b2);
}

TEST(Train, CirclesMlpLearns) {
  const Dataset ds = make_circles(1000, 0.05, 0.5, 3);
  const Splits s = split(ds, {0.8, 0.1, 0.1}, 3);
  const Standardizer st = fit_standardizer(s.train);
  const ModelArtifact init = init_model(ModelKind::kMlp, 2, 2, 100, 3);
  const ModelArtifact m = train(init, s.train.standardized(st), s.val.standardized(st), TrainConfig{});
  EXPECT_GE(m.training.best_val_accuracy, 0.95);
}

TEST(Artifact, ValidateCatchesShapes) {
  ModelArtifact m = init_model(ModelKind::kMlp, 3, 2, 4, 1);
  EXPECT_NO_THROW(m.validate());
  m.b1.resize(2);
  EXPECT_THROW(m.validate(), InvalidInput);
  EXPECT_THROW(parse_model_kind("svm"), InvalidInput);
}

}  // namespace
}  // namespace relstab
