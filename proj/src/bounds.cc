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

#include "relstab/bounds.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace relstab {
namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double slack(double bound, double empirical) {
  if (empirical == 0.0) return std::numeric_limits<double>::infinity();
  return bound / empirical;
}

}  // namespace

PowerIteration spectral_norm(const Matrix& w, double tol, int max_iterations, std::uint64_t seed) {
  PowerIteration out;
  if (w.size() == 0) {
    out.converged = true;
    return out;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(w.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  v.normalize();

  double estimate = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    const Vector wv = w * v;
    const Vector next = w.transpose() * wv;
    const double eig = v.dot(next);  // Rayleigh quotient of W^T W
    out.iterations = it;
    if (eig <= 0.0) {
      // v lies in the null space; W is zero or v is orthogonal to the row space.
      if (w.cwiseAbs().maxCoeff() == 0.0) {
        out.value = 0.0;
        out.converged = true;
        return out;
      }
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
      v.normalize();
      continue;
    }
    out.residual = (next - eig * v).norm() / eig;
    const double s = std::sqrt(eig);
    const bool settled = std::abs(s - estimate) <= tol * s;
    estimate = s;
    v = next / next.norm();
    if (settled) {
      out.converged = true;
      break;
    }
  }
  out.value = estimate;
  return out;
}

double operator_norm(const Matrix& w, NormOrder p) {
  if (w.size() == 0) return 0.0;
  switch (p) {
    case NormOrder::kL1: {
      double best = 0.0;
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < w.rows(); ++i) sum += std::abs(w(i, j));
        best = std::max(best, sum);
      }
      return best;
    }
    case NormOrder::kLinf: {
      double best = 0.0;
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < w.cols(); ++j) sum += std::abs(w(i, j));
        best = std::max(best, sum);
      }
      return best;
    }
    case NormOrder::kL2: {
      const PowerIteration pi = spectral_norm(w);
      if (!pi.converged) {
        throw NumericalError("power iteration did not converge after " +
                             std::to_string(pi.iterations) + " iterations (residual " +
                             std::to_string(pi.residual) + ")");
      }
      return pi.value;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

LayerLipschitz layer_lipschitz(const ModelArtifact& model, NormOrder p) {
  LayerLipschitz out;
  out.l1 = operator_norm(model.w1, p);
  out.l2 = model.kind == ModelKind::kMlp ? operator_norm(model.w2, p) : 1.0;
  out.degenerate = out.l1 == 0.0 || out.l2 == 0.0;
  return out;
}

bool bound_violated(double empirical, double bound, double tol) {
  return empirical > bound * (1.0 + tol) + tol;
}

BoundRecord verify_bound(const StabilityRecord& rec, const Vector& x, const Vector& rep_x,
                         const LayerLipschitz& lip, NormOrder p, double tol) {
  if (rec.denom_mode != DenomMode::kNormRatio) {
    throw InvalidInput("bound verification requires norm_ratio metric records");
  }
  const double x_norm = lp_norm(x, p);
  const double rep_norm = lp_norm(rep_x, p);
  BoundRecord b;
  b.point_id = rec.point_id;
  b.method = rec.method;
  b.l1 = lip.l1;
  b.l2 = lip.l2;
  b.lambda1 = rep_norm / x_norm;
  b.lambda2 = rep_norm;
  b.lambda1_sound = x_norm / rep_norm;
  b.ris = rec.ris;
  b.rrs = rec.rrs;
  b.ros = rec.ros;
  b.bound_ris = b.lambda1 * b.l1 * b.rrs;
  b.bound_rrs = b.lambda2 * b.l2 * b.ros;
  b.bound_ris_sound = b.lambda1_sound * b.l1 * b.rrs;
  b.bound_composite = b.lambda1 * b.lambda2 * b.l1 * b.l2 * b.ros;
  b.slack_ris = slack(b.bound_ris, b.ris);
  b.slack_rrs = slack(b.bound_rrs, b.rrs);
  b.violated_ris = bound_violated(b.ris, b.bound_ris, tol);
  b.violated_rrs = bound_violated(b.rrs, b.bound_rrs, tol);
  b.violated_ris_sound = bound_violated(b.ris, b.bound_ris_sound, tol);
  return b;
}

std::vector<BoundRecord> verify_bounds(std::span<const StabilityRecord> records,
                                       std::span<const Vector> anchors,
                                       const ModelArtifact& model, NormOrder p, double tol) {
  if (records.size() != anchors.size()) {
    throw InvalidInput("verify_bounds needs one anchor per record");
  }
  const LayerLipschitz lip = layer_lipschitz(model, p);
  std::vector<BoundRecord> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back(verify_bound(records[i], anchors[i], representation(model, anchors[i]), lip, p, tol));
  }
  return out;
}

SlackSummary summarize_slack(std::span<const double> slacks) {
  SlackSummary s;
  std::vector<double> finite;
  double log_sum = 0.0;
  for (double v : slacks) {
    if (std::isinf(v) && v > 0) {
      ++s.unbounded;
      continue;
    }
    if (!(v > 0.0) || !std::isfinite(v)) continue;
    finite.push_back(v);
    log_sum += std::log(v);
  }
  s.count = static_cast<int>(finite.size());
  if (s.count == 0) {
    s.geometric_mean = s.log_mean = s.median = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.log_mean = log_sum / static_cast<double>(s.count);
  s.geometric_mean = std::exp(s.log_mean);
  s.median = median_of(std::move(finite));
  return s;
}

std::map<Method, TightnessRow> tightness_summary(std::span<const BoundRecord> records) {
  std::map<Method, std::vector<const BoundRecord*>> grouped;
  for (const auto& r : records) grouped[r.method].push_back(&r);
  std::map<Method, TightnessRow> out;
  for (const auto& [method, rows] : grouped) {
    TightnessRow row;
    std::vector<double> ris;
    std::vector<double> rrs;
    for (const BoundRecord* r : rows) {
      ++row.records;
      row.violations_ris += r->violated_ris ? 1 : 0;
      row.violations_rrs += r->violated_rrs ? 1 : 0;
      row.violations_ris_sound += r->violated_ris_sound ? 1 : 0;
      ris.push_back(r->slack_ris);
      rrs.push_back(r->slack_rrs);
    }
    row.ris = summarize_slack(ris);
    row.rrs = summarize_slack(rrs);
    out.emplace(method, row);
  }
  return out;
}

}  // namespace relstab
