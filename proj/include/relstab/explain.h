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

#ifndef RELSTAB_EXPLAIN_H_
#define RELSTAB_EXPLAIN_H_

#include <array>
#include <cstdint>
#include <string_view>

#include "relstab/common.h"
#include "relstab/model.h"

namespace relstab {

enum class Method {
  kVanillaGrad,
  kGradXInput,
  kSmoothGrad,
  kIntegratedGradients,
  kLime,
  kKernelShap,
  kRandom,
};

inline constexpr std::array<Method, 7> kAllMethods = {
    Method::kVanillaGrad, Method::kGradXInput, Method::kSmoothGrad,
    Method::kIntegratedGradients, Method::kLime, Method::kKernelShap, Method::kRandom};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
// VanillaGrad, Gradient x Input, SmoothGrad and Integrated Gradients.
bool is_gradient_method(Method method);

// Hyperparameters for one explainer. Only the fields belonging to `method`
// are read; defaults are the evaluation-protocol values.
struct ExplainerConfig {
  Method method = Method::kVanillaGrad;

  int smoothgrad_samples = 50;
  double smoothgrad_std = 0.05;

  int ig_steps = 64;
  Vector baseline;  // IG and KernelSHAP; empty means the zero vector

  int lime_samples = 1000;
  double lime_kernel_width = 0.75;
  double lime_std = 0.05;
  double lime_ridge = 1e-3;

  int shap_samples = 500;
};

struct Attribution {
  Vector values;
  Method method = Method::kVanillaGrad;
  Label target = 0;
  std::uint64_t seed = 0;
  ExplainerConfig config;
};

// |d logit_target / dx|
Attribution vanilla_grad(const Predictor& model, const Vector& x, Label target);

// (d logit_target / dx) * x, signed.
Attribution grad_x_input(const Predictor& model, const Vector& x, Label target);

// Mean of |gradient| over `n` Gaussian-perturbed copies of x.
Attribution smoothgrad(const Predictor& model, const Vector& x, Label target, int n,
                       double stddev, std::uint64_t seed);

// Midpoint Riemann approximation of the path integral from `baseline` to x.
Attribution integrated_gradients(const Predictor& model, const Vector& x, Label target,
                                 const Vector& baseline, int steps);

// Weighted ridge surrogate of the target-class probability fitted on
// Gaussian samples around x, with an exponential kernel on Euclidean distance.
// The intercept is fitted but not penalised.
Attribution lime(const Predictor& model, const Vector& x, Label target, int n_samples,
                 double kernel_width, double stddev, std::uint64_t seed, double ridge = 1e-3);

// Shapley-kernel weighted least squares on the target logit of the masking
// game (x on the coalition, baseline elsewhere), constrained so that the
// attributions sum to h(x) - h(baseline). When 2^d <= n_samples every coalition
// is enumerated with its exact kernel weight; otherwise coalitions are drawn
// with size probability proportional to the kernel.
Attribution kernel_shap(const Predictor& model, const Vector& x, Label target, int n_samples,
                        const Vector& baseline, std::uint64_t seed);

// Exact Shapley values of the same masking game by full enumeration (d <= 12).
Vector exact_shapley_oracle(const Predictor& model, const Vector& x, Label target,
                            const Vector& baseline);

// d i.i.d. standard normal draws.
Attribution random_baseline(Eigen::Index d, std::uint64_t seed);

// Dispatches on `cfg.method`.
Attribution explain(const Predictor& model, const Vector& x, Label target,
                    const ExplainerConfig& cfg, std::uint64_t seed);

}  // namespace relstab

#endif  // RELSTAB_EXPLAIN_H_
