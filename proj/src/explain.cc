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

#include <bit>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace relstab {
namespace {

Vector resolve_baseline(const Vector& baseline, Eigen::Index d) {
  if (baseline.size() == 0) return Vector::Zero(d);
  if (baseline.size() != d) {
    throw InvalidInput("baseline has dimension " + std::to_string(baseline.size()) +
                       ", expected " + std::to_string(d));
  }
  return baseline;
}

void check_dims(const Predictor& model, const Vector& x, Label target) {
  if (x.size() != model.input_dim()) throw InvalidInput("input dimension mismatch");
  if (target < 0 || target >= model.num_classes()) {
    throw InvalidInput("target class " + std::to_string(target) + " out of range");
  }
}

Attribution make(Vector values, Method method, Label target, std::uint64_t seed,
                 ExplainerConfig cfg) {
  cfg.method = method;
  return Attribution{std::move(values), method, target, seed, std::move(cfg)};
}

// Running mean; equal samples reproduce the sample bit for bit.
void accumulate_mean(Vector& mean, const Vector& sample, int count) {
  mean += (sample - mean) / static_cast<double>(count);
}

Vector masked(const Vector& x, const Vector& baseline, unsigned long long mask) {
  Vector z = baseline;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (mask & (1ULL << i)) z[i] = x[i];
  }
  return z;
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kVanillaGrad:
      return "VanillaGrad";
    case Method::kGradXInput:
      return "GradXInput";
    case Method::kSmoothGrad:
      return "SmoothGrad";
    case Method::kIntegratedGradients:
      return "IntegratedGradients";
    case Method::kLime:
      return "LIME";
    case Method::kKernelShap:
      return "KernelSHAP";
    case Method::kRandom:
      return "Random";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (name == to_string(m)) return m;
  }
  static const std::map<std::string, Method, std::less<>> aliases = {
      {"vanillagrad", Method::kVanillaGrad},     {"vanilla_grad", Method::kVanillaGrad},
      {"gradxinput", Method::kGradXInput},       {"grad_x_input", Method::kGradXInput},
      {"smoothgrad", Method::kSmoothGrad},       {"integratedgradients", Method::kIntegratedGradients},
      {"ig", Method::kIntegratedGradients},      {"integrated_gradients", Method::kIntegratedGradients},
      {"lime", Method::kLime},                   {"kernelshap", Method::kKernelShap},
      {"shap", Method::kKernelShap},             {"kernel_shap", Method::kKernelShap},
      {"random", Method::kRandom}};
  std::string lower(name);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (auto it = aliases.find(lower); it != aliases.end()) return it->second;
  throw InvalidInput("unknown explainer '" + std::string(name) + "'");
}

bool is_gradient_method(Method method) {
  return method == Method::kVanillaGrad || method == Method::kGradXInput ||
         method == Method::kSmoothGrad || method == Method::kIntegratedGradients;
}

Attribution vanilla_grad(const Predictor& model, const Vector& x, Label target) {
  check_dims(model, x, target);
  return make(model.input_gradient(x, target).cwiseAbs(), Method::kVanillaGrad, target, 0, {});
}

Attribution grad_x_input(const Predictor& model, const Vector& x, Label target) {
  check_dims(model, x, target);
  return make(model.input_gradient(x, target).cwiseProduct(x), Method::kGradXInput, target, 0, {});
}

Attribution smoothgrad(const Predictor& model, const Vector& x, Label target, int n, double stddev,
                       std::uint64_t seed) {
  check_dims(model, x, target);
  if (n < 1) throw InvalidInput("smoothgrad needs n >= 1");
  if (stddev < 0.0) throw InvalidInput("smoothgrad std must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Vector mean = Vector::Zero(x.size());
  Vector probe(x.size());
  for (int k = 1; k <= n; ++k) {
    for (Eigen::Index i = 0; i < x.size(); ++i) probe[i] = x[i] + stddev * noise(rng);
    accumulate_mean(mean, model.input_gradient(probe, target).cwiseAbs(), k);
  }
  ExplainerConfig cfg;
  cfg.smoothgrad_samples = n;
  cfg.smoothgrad_std = stddev;
  return make(std::move(mean), Method::kSmoothGrad, target, seed, std::move(cfg));
}

Attribution integrated_gradients(const Predictor& model, const Vector& x, Label target,
                                 const Vector& baseline, int steps) {
  check_dims(model, x, target);
  if (steps < 1) throw InvalidInput("integrated gradients needs steps >= 1");
  const Vector base = resolve_baseline(baseline, x.size());
  const Vector delta = x - base;
  Vector mean = Vector::Zero(x.size());
  for (int k = 1; k <= steps; ++k) {
    const double alpha = (static_cast<double>(k) - 0.5) / static_cast<double>(steps);
    accumulate_mean(mean, model.input_gradient(base + alpha * delta, target), k);
  }
  ExplainerConfig cfg;
  cfg.ig_steps = steps;
  cfg.baseline = base;
  return make(delta.cwiseProduct(mean), Method::kIntegratedGradients, target, 0, std::move(cfg));
}

Attribution lime(const Predictor& model, const Vector& x, Label target, int n_samples,
                 double kernel_width, double stddev, std::uint64_t seed, double ridge) {
  check_dims(model, x, target);
  if (n_samples < 2) throw InvalidInput("LIME needs at least 2 samples");
  if (!(kernel_width > 0.0)) throw InvalidInput("LIME kernel width must be positive");
  const Eigen::Index d = x.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  Matrix z(n_samples, d);
  Vector y(n_samples);
  Vector w(n_samples);
  for (int k = 0; k < n_samples; ++k) {
    for (Eigen::Index i = 0; i < d; ++i) z(k, i) = x[i] + stddev * noise(rng);
    const Vector zk = z.row(k).transpose();
    w[k] = std::exp(-(zk - x).squaredNorm() / (kernel_width * kernel_width));
    y[k] = model.forward(zk).probs[target];
  }
  const double w_sum = w.sum();
  if (!(w_sum > 0.0)) throw NumericalError("LIME kernel weights vanished");
  const Vector z_mean = (z.transpose() * w) / w_sum;
  const double y_mean = w.dot(y) / w_sum;
  Matrix zc = z.rowwise() - z_mean.transpose();
  const Vector yc = y.array() - y_mean;

  Matrix gram = zc.transpose() * w.asDiagonal() * zc;
  gram.diagonal().array() += ridge;
  const Vector rhs = zc.transpose() * w.asDiagonal() * yc;
  Eigen::LDLT<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success || !solver.isPositive()) {
    throw NumericalError("LIME weighted normal equations are singular");
  }
  Vector coef = solver.solve(rhs);
  if (!coef.allFinite()) throw NumericalError("LIME produced non-finite coefficients");

  ExplainerConfig cfg;
  cfg.lime_samples = n_samples;
  cfg.lime_kernel_width = kernel_width;
  cfg.lime_std = stddev;
  cfg.lime_ridge = ridge;
  return make(std::move(coef), Method::kLime, target, seed, std::move(cfg));
}

Attribution kernel_shap(const Predictor& model, const Vector& x, Label target, int n_samples,
                        const Vector& baseline, std::uint64_t seed) {
  check_dims(model, x, target);
  const Eigen::Index d = x.size();
  if (d > 62) throw InvalidInput("KernelSHAP supports at most 62 features");
  const Vector base = resolve_baseline(baseline, d);
  const auto value = [&](unsigned long long mask) {
    return model.logits(masked(x, base, mask))[target];
  };
  const unsigned long long full = (1ULL << d) - 1;
  const double v_empty = value(0);
  const double v_full = value(full);
  const double total = v_full - v_empty;
  ExplainerConfig cfg;
  cfg.shap_samples = n_samples;
  cfg.baseline = base;
  if (d == 1) return make(Vector::Constant(1, total), Method::kKernelShap, target, seed, std::move(cfg));

  // Proper, non-empty coalitions with their regression weights.
  std::map<unsigned long long, double> coalitions;
  const bool exhaustive = d < 62 && static_cast<double>(1ULL << d) <= static_cast<double>(n_samples);
  if (exhaustive) {
    for (unsigned long long mask = 1; mask < full; ++mask) {
      const int s = std::popcount(mask);
      coalitions[mask] = static_cast<double>(d - 1) /
                         (binomial(static_cast<int>(d), s) * s * static_cast<double>(d - s));
    }
  } else {
    std::vector<double> size_weight(static_cast<std::size_t>(d - 1));
    for (Eigen::Index s = 1; s < d; ++s) {
      size_weight[static_cast<std::size_t>(s - 1)] =
          static_cast<double>(d - 1) / (static_cast<double>(s) * static_cast<double>(d - s));
    }
    std::mt19937_64 rng(seed);
    std::discrete_distribution<int> pick_size(size_weight.begin(), size_weight.end());
    std::vector<int> players(static_cast<std::size_t>(d));
    for (int draw = 0; draw < n_samples - 2; ++draw) {
      const int s = pick_size(rng) + 1;
      std::iota(players.begin(), players.end(), 0);
      unsigned long long mask = 0;
      for (int k = 0; k < s; ++k) {
        const auto j = static_cast<std::size_t>(k) +
                       static_cast<std::size_t>(rng() % (static_cast<std::uint64_t>(d) -
                                                          static_cast<std::uint64_t>(k)));
        std::swap(players[static_cast<std::size_t>(k)], players[j]);
        mask |= 1ULL << players[static_cast<std::size_t>(k)];
      }
      coalitions[mask] += 1.0;
    }
  }
  if (static_cast<Eigen::Index>(coalitions.size()) + 2 < d + 2) {
    throw NumericalError("KernelSHAP sampled " + std::to_string(coalitions.size() + 2) +
                         " distinct coalitions, needs at least " + std::to_string(d + 2));
  }

  // Eliminate the last attribution through the efficiency constraint.
  const Eigen::Index rows = static_cast<Eigen::Index>(coalitions.size());
  Eigen::MatrixXd design(rows, d - 1);
  Vector target_values(rows);
  Vector weights(rows);
  Eigen::Index r = 0;
  for (const auto& [mask, weight] : coalitions) {
    const double last = (mask >> (d - 1)) & 1ULL ? 1.0 : 0.0;
    for (Eigen::Index i = 0; i < d - 1; ++i) {
      design(r, i) = ((mask >> i) & 1ULL ? 1.0 : 0.0) - last;
    }
    target_values[r] = value(mask) - v_empty - last * total;
    weights[r] = weight;
    ++r;
  }
  const Vector sqrt_w = weights.cwiseSqrt();
  const Eigen::MatrixXd weighted = sqrt_w.asDiagonal() * design;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(weighted);
  if (qr.rank() < d - 1) throw NumericalError("KernelSHAP regression is rank deficient");
  const Vector head = qr.solve(sqrt_w.cwiseProduct(target_values));

  Vector phi(d);
  phi.head(d - 1) = head;
  phi[d - 1] = total - head.sum();
  return make(std::move(phi), Method::kKernelShap, target, seed, std::move(cfg));
}

Vector exact_shapley_oracle(const Predictor& model, const Vector& x, Label target,
                            const Vector& baseline) {
  check_dims(model, x, target);
  const Eigen::Index d = x.size();
  if (d < 1 || d > 12) throw InvalidInput("exact Shapley enumeration supports 1 <= d <= 12");
  const Vector base = resolve_baseline(baseline, d);
  const unsigned long long count = 1ULL << d;
  std::vector<double> v(count);
  for (unsigned long long mask = 0; mask < count; ++mask) {
    v[mask] = model.logits(masked(x, base, mask))[target];
  }
  std::vector<double> factorial(static_cast<std::size_t>(d) + 1, 1.0);
  for (std::size_t k = 1; k < factorial.size(); ++k) factorial[k] = factorial[k - 1] * static_cast<double>(k);

  Vector phi = Vector::Zero(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const unsigned long long bit = 1ULL << i;
    for (unsigned long long mask = 0; mask < count; ++mask) {
      if (mask & bit) continue;
      const auto s = static_cast<std::size_t>(std::popcount(mask));
      const double weight = factorial[s] * factorial[static_cast<std::size_t>(d) - s - 1] /
                            factorial[static_cast<std::size_t>(d)];
      phi[i] += weight * (v[mask | bit] - v[mask]);
    }
  }
  return phi;
}

Attribution random_baseline(Eigen::Index d, std::uint64_t seed) {
  if (d < 1) throw InvalidInput("random baseline needs d >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector values(d);
  for (Eigen::Index i = 0; i < d; ++i) values[i] = normal(rng);
  return make(std::move(values), Method::kRandom, 0, seed, {});
}

Attribution explain(const Predictor& model, const Vector& x, Label target,
                    const ExplainerConfig& cfg, std::uint64_t seed) {
  Attribution out;
  switch (cfg.method) {
    case Method::kVanillaGrad:
      out = vanilla_grad(model, x, target);
      break;
    case Method::kGradXInput:
      out = grad_x_input(model, x, target);
      break;
    case Method::kSmoothGrad:
      out = smoothgrad(model, x, target, cfg.smoothgrad_samples, cfg.smoothgrad_std, seed);
      break;
    case Method::kIntegratedGradients:
      out = integrated_gradients(model, x, target, cfg.baseline, cfg.ig_steps);
      break;
    case Method::kLime:
      out = lime(model, x, target, cfg.lime_samples, cfg.lime_kernel_width, cfg.lime_std, seed,
                 cfg.lime_ridge);
      break;
    case Method::kKernelShap:
      out = kernel_shap(model, x, target, cfg.shap_samples, cfg.baseline, seed);
      break;
    case Method::kRandom:
      if (x.size() != model.input_dim()) throw InvalidInput("input dimension mismatch");
      out = random_baseline(x.size(), seed);
      out.target = target;
      break;
  }
  out.seed = seed;
  out.config = cfg;
  return out;
}

}  // namespace relstab
