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

#include "relstab/explain.h"

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"

namespace relstab {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ModelPredictor logistic(const Vector& w, double b = 0.25) {
  return ModelPredictor(oracle::binary_logistic(w, b));
}

double target_logit(const Predictor& p, const Vector& x, Label t) { return p.logits(x)[t]; }

TEST(Names, RoundTrip) {
  for (Method m : kAllMethods) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_EQ(parse_method("ig"), Method::kIntegratedGradients);
  EXPECT_THROW(parse_method("DeepLift"), InvalidInput);
  EXPECT_TRUE(is_gradient_method(Method::kSmoothGrad));
  EXPECT_FALSE(is_gradient_method(Method::kLime));
}

TEST(VanillaGrad, LogisticAbsWeights) {
  const auto p = logistic(vec({3, -2}));
  EXPECT_EQ(vanilla_grad(p, vec({0.1, 5}), 1).values, vec({3, 2}));
  EXPECT_EQ(vanilla_grad(p, vec({-4, 2}), 1).values, vec({3, 2}));
}

TEST(VanillaGrad, DeadReluIsZero) {
  ModelArtifact m = init_model(ModelKind::kMlp, 2, 2, 4, 1);
  m.w1.setOnes();
  m.b1.setConstant(-5.0);
  EXPECT_EQ(vanilla_grad(ModelPredictor(m), vec({0.5, 0.5}), 0).values, Vector::Zero(2));
}

TEST(GradXInput, Logistic) {
  const auto p = logistic(vec({3, -2}));
  EXPECT_EQ(grad_x_input(p, vec({1, 1}), 1).values, vec({3, -2}));
  EXPECT_EQ(grad_x_input(p, Vector::Zero(2), 1).values, Vector::Zero(2));
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const Vector w = oracle::random_vector(4, rng);
    const Vector x = oracle::random_vector(4, rng);
    EXPECT_EQ(grad_x_input(logistic(w), x, 1).values, Vector(w.cwiseProduct(x)));
  }
}

TEST(SmoothGrad, LinearEqualsVanilla) {
  const auto p = logistic(vec({0.7, -1.3, 2.0}));
  const Vector x = vec({0.2, 0.4, -0.1});
  for (int n : {1, 7, 50}) {
    for (double s : {0.0, 0.05, 3.0}) {
      EXPECT_EQ(smoothgrad(p, x, 1, n, s, 9).values, vanilla_grad(p, x, 1).values);
    }
  }
}

TEST(SmoothGrad, ZeroStdEqualsVanillaOnMlp) {
  std::mt19937_64 rng(8);
  const ModelPredictor p(oracle::random_mlp(3, 10, 2, rng));
  const Vector x = oracle::random_vector(3, rng);
  EXPECT_EQ(smoothgrad(p, x, 0, 20, 0.0, 1).values, vanilla_grad(p, x, 0).values);
}

TEST(SmoothGrad, MonteCarloConverges) {
  std::mt19937_64 rng(13);
  const ModelPredictor p(oracle::random_mlp(3, 20, 2, rng));
  const Vector x = oracle::random_vector(3, rng);
  const double stddev = 0.5;
  // Standard error from an independent batch of per-sample |gradients|.
  std::mt19937_64 probe_rng(99);
  std::normal_distribution<double> noise(0.0, stddev);
  const int batch = 4000;
  Vector sum = Vector::Zero(3);
  Vector sum_sq = Vector::Zero(3);
  for (int k = 0; k < batch; ++k) {
    Vector z = x;
    for (Eigen::Index i = 0; i < 3; ++i) z[i] += noise(probe_rng);
    const Vector g = p.input_gradient(z, 1).cwiseAbs();
    sum += g;
    sum_sq += g.cwiseProduct(g);
  }
  const Vector var = (sum_sq / batch - (sum / batch).cwiseAbs2()).cwiseMax(0.0);
  const Vector a = smoothgrad(p, x, 1, 1000, stddev, 1).values;
  const Vector b = smoothgrad(p, x, 1, 2000, stddev, 2).values;
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double se = std::sqrt(var[i] / 1000.0 + var[i] / 2000.0);
    EXPECT_LT(std::fabs(a[i] - b[i]), 3.0 * se + 1e-12) << "feature " << i;
  }
}

TEST(IntegratedGradients, LinearClosedForm) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const Vector w = oracle::random_vector(3, rng);
    const Vector x = oracle::random_vector(3, rng);
    const Vector base = oracle::random_vector(3, rng);
    const auto p = logistic(w);
    for (int steps : {1, 2, 64}) {
      const Vector ig = integrated_gradients(p, x, 1, base, steps).values;
      EXPECT_LE((ig - (x - base).cwiseProduct(w)).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(IntegratedGradients, BaselineEqualsInput) {
  std::mt19937_64 rng(6);
  const ModelPredictor p(oracle::random_mlp(3, 8, 2, rng));
  const Vector x = oracle::random_vector(3, rng);
  EXPECT_EQ(integrated_gradients(p, x, 0, x, 16).values, Vector::Zero(3));
}

TEST(IntegratedGradients, Completeness) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 20; ++t) {
    const ModelPredictor p(init_model(ModelKind::kMlp, 4, 2, 100, static_cast<std::uint64_t>(t)));
    const Vector x = oracle::random_vector(4, rng);
    const Vector base = Vector::Zero(4);
    const double gap = integrated_gradients(p, x, 1, base, 256).values.sum() -
                       (target_logit(p, x, 1) - target_logit(p, base, 1));
    EXPECT_LT(std::fabs(gap), 1e-3);
  }
}

// Kinks make the midpoint rule first order, so the gap roughly halves per
// doubling on large-weight networks too.
TEST(IntegratedGradients, GapShrinksWithSteps) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 10; ++t) {
    const ModelPredictor p(oracle::random_mlp(4, 12, 2, rng));
    const Vector x = oracle::random_vector(4, rng);
    const Vector base = Vector::Zero(4);
    const double total = target_logit(p, x, 1) - target_logit(p, base, 1);
    const auto gap = [&](int steps) {
      return std::fabs(integrated_gradients(p, x, 1, base, steps).values.sum() - total);
    };
    EXPECT_LT(gap(4096), 1e-3);
    EXPECT_LE(gap(4096), 1.1 * gap(256) + 1e-12);
  }
}

TEST(Lime, LogisticAlignsWithProbabilityGradient) {
  const Vector w = vec({1.5, -0.8});
  const auto p = logistic(w, 0.1);
  const Vector x = vec({0.2, 0.3});
  const double prob = p.forward(x).probs[1];
  const Vector analytic = prob * (1.0 - prob) * w;
  const Vector coef = lime(p, x, 1, 1000, 0.75, 0.05, 3).values;
  EXPECT_GT(coef.dot(analytic) / (coef.norm() * analytic.norm()), 0.99);
}

TEST(Lime, ConstantModelGivesZero) {
  const oracle::FunctionPredictor flat(3, 2, [](const Vector&) { return vec({0.2, -0.4}); });
  const Vector coef = lime(flat, vec({1, 2, 3}), 0, 500, 0.75, 0.05, 1).values;
  EXPECT_LT(coef.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Lime, Deterministic) {
  std::mt19937_64 rng(1);
  const ModelPredictor p(oracle::random_mlp(3, 8, 2, rng));
  const Vector x = oracle::random_vector(3, rng);
  EXPECT_EQ(lime(p, x, 1, 200, 0.75, 0.05, 42).values, lime(p, x, 1, 200, 0.75, 0.05, 42).values);
}

TEST(KernelShap, LinearClosedForm) {
  std::mt19937_64 rng(5);
  for (int d : {2, 3, 6, 12}) {
    const Vector w = oracle::random_vector(d, rng);
    const Vector x = oracle::random_vector(d, rng);
    const Vector base = oracle::random_vector(d, rng);
    const auto p = logistic(w);
    // 2^12 > 500, so d = 12 runs the sampled path.
    const Vector phi = kernel_shap(p, x, 1, 500, base, 7).values;
    EXPECT_LE((phi - w.cwiseProduct(x - base)).cwiseAbs().maxCoeff(), 1e-6) << "d=" << d;
  }
}

TEST(KernelShap, BaselineEqualsInput) {
  std::mt19937_64 rng(3);
  const ModelPredictor p(oracle::random_mlp(4, 8, 2, rng));
  const Vector x = oracle::random_vector(4, rng);
  EXPECT_LE(kernel_shap(p, x, 0, 500, x, 1).values.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(KernelShap, MatchesExactShapleyWhenExhaustive) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 10; ++t) {
    const int d = 2 + t % 7;
    const ModelPredictor p(oracle::random_mlp(d, 10, 2, rng));
    const Vector x = oracle::random_vector(d, rng);
    const Vector base = oracle::random_vector(d, rng);
    const Vector phi = kernel_shap(p, x, 1, 1 << d, base, 1).values;
    const Vector exact = exact_shapley_oracle(p, x, 1, base);
    EXPECT_LE((phi - exact).cwiseAbs().maxCoeff(), 1e-6) << "d=" << d;
    EXPECT_NEAR(phi.sum(), target_logit(p, x, 1) - target_logit(p, base, 1), 1e-9);
  }
}

TEST(KernelShap, SampledPathKeepsEfficiency) {
  std::mt19937_64 rng(22);
  const ModelPredictor p(oracle::random_mlp(10, 16, 2, rng));
  const Vector x = oracle::random_vector(10, rng);
  const Vector base = Vector::Zero(10);
  const Vector phi = kernel_shap(p, x, 0, 300, base, 4).values;
  EXPECT_NEAR(phi.sum(), target_logit(p, x, 0) - target_logit(p, base, 0), 1e-9);
  EXPECT_EQ(phi, kernel_shap(p, x, 0, 300, base, 4).values);
}

TEST(ExactShapley, MatchesPermutationAverage) {
  std::mt19937_64 rng(31);
  for (int d = 1; d <= 6; ++d) {
    const ModelArtifact m = oracle::random_mlp(d, 9, 2, rng);
    const ModelPredictor p(m);
    const Vector x = oracle::random_vector(d, rng);
    const Vector base = oracle::random_vector(d, rng);
    const auto value = [&m](const oracle::Vec& z) { return oracle::naive_logit(m, z, 1); };
    const Vector expected =
        oracle::to_eigen(oracle::permutation_shapley(value, oracle::to_vec(x), oracle::to_vec(base)));
    EXPECT_LE((exact_shapley_oracle(p, x, 1, base) - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ExactShapley, SinglePlayerAndSymmetry) {
  std::mt19937_64 rng(32);
  const ModelPredictor one(oracle::random_mlp(1, 5, 2, rng));
  const Vector x1 = vec({0.7});
  const Vector b1 = vec({-0.2});
  EXPECT_NEAR(exact_shapley_oracle(one, x1, 1, b1)[0],
              target_logit(one, x1, 1) - target_logit(one, b1, 1), 1e-14);
  EXPECT_NEAR(kernel_shap(one, x1, 1, 10, b1, 0).values[0],
              target_logit(one, x1, 1) - target_logit(one, b1, 1), 1e-14);

  // Features 0 and 1 are interchangeable: identical columns, equal values.
  ModelArtifact m = oracle::random_mlp(3, 6, 2, rng);
  m.w1.col(1) = m.w1.col(0);
  const ModelPredictor p(m);
  const Vector x = vec({0.4, 0.4, -1.0});
  const Vector phi = exact_shapley_oracle(p, x, 1, Vector::Zero(3));
  EXPECT_NEAR(phi[0], phi[1], 1e-12);
}

TEST(ExactShapley, LinearThreeFeatures) {
  const Vector w = vec({2, -1, 0.5});
  const auto p = logistic(w);
  const Vector x = vec({1, 2, 3});
  const Vector base = vec({0.5, 0, -1});
  EXPECT_LE((exact_shapley_oracle(p, x, 1, base) - w.cwiseProduct(x - base)).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(RandomBaseline, Statistics) {
  const Vector r = random_baseline(100000, 5).values;
  const double mean = r.mean();
  const double sd = std::sqrt((r.array() - mean).square().mean());
  EXPECT_LT(std::fabs(mean), 0.02);
  EXPECT_LT(std::fabs(sd - 1.0), 0.02);
  EXPECT_EQ(random_baseline(10, 5).values, random_baseline(10, 5).values);
  EXPECT_NE(random_baseline(10, 5).values, random_baseline(10, 6).values);
}

TEST(RandomBaseline, IndependentOfModelAndInput) {
  std::mt19937_64 rng(1);
  const ModelPredictor a(oracle::random_mlp(3, 4, 2, rng));
  const auto b = logistic(vec({1, 2, 3}));
  ExplainerConfig cfg;
  cfg.method = Method::kRandom;
  EXPECT_EQ(explain(a, vec({1, 2, 3}), 0, cfg, 8).values, explain(b, vec({-4, 0, 9}), 1, cfg, 8).values);
}

TEST(Dispatch, UsesConfig) {
  const auto p = logistic(vec({3, -2}));
  ExplainerConfig cfg;
  cfg.method = Method::kGradXInput;
  const Attribution a = explain(p, vec({2, 2}), 1, cfg, 0);
  EXPECT_EQ(a.method, Method::kGradXInput);
  EXPECT_EQ(a.values, vec({6, -4}));
  EXPECT_THROW(explain(p, vec({2, 2, 2}), 1, cfg, 0), InvalidInput);
  EXPECT_THROW(explain(p, vec({2, 2}), 2, cfg, 0), InvalidInput);
}

}  // namespace
}  // namespace relstab
