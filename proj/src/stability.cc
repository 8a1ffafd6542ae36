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

#include "relstab/stability.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace relstab {
namespace {

enum class Denominator { kRelative, kAbsolute };

void check_rows(const Vector& e_x, const Matrix& neighbor_expl, const Vector& ref,
                const Matrix& neighbor_ref) {
  if (neighbor_expl.rows() != neighbor_ref.rows()) {
    throw InvalidInput("neighbor explanations and neighbor points differ in count");
  }
  if (neighbor_expl.rows() > 0 && neighbor_expl.cols() != e_x.size()) {
    throw InvalidInput("neighbor explanation dimension mismatch");
  }
  if (neighbor_ref.rows() > 0 && neighbor_ref.cols() != ref.size()) {
    throw InvalidInput("neighbor point dimension mismatch");
  }
}

double relative_distance(const Vector& a, const Vector& b, const MetricConfig& cfg) {
  if (cfg.denom_mode == DenomMode::kElementwise) {
    return lp_norm(percent_change(a, b, cfg.eps_div), cfg.p);
  }
  return lp_norm(a - b, cfg.p) / std::max(lp_norm(a, cfg.p), cfg.eps_div);
}

// Shared core of the three relative metrics: the numerator is always the
// percent change of the explanation.
MetricResult relative_metric(const Vector& e_x, const Matrix& neighbor_expl, const Vector& ref,
                             const Matrix& neighbor_ref, Denominator kind,
                             const MetricConfig& cfg) {
  cfg.validate();
  check_rows(e_x, neighbor_expl, ref, neighbor_ref);
  MetricResult out;
  out.per_neighbor = Vector::Zero(neighbor_expl.rows());
  for (Eigen::Index k = 0; k < neighbor_expl.rows(); ++k) {
    const Vector e_k = neighbor_expl.row(k).transpose();
    const Vector r_k = neighbor_ref.row(k).transpose();
    const double num = lp_norm(percent_change(e_x, e_k, cfg.eps_div), cfg.p);
    const double den = kind == Denominator::kRelative ? relative_distance(ref, r_k, cfg)
                                                      : lp_norm(ref - r_k, cfg.p);
    if (num == 0.0 && den == 0.0) {
      ++out.skipped;
      continue;
    }
    const double ratio = num / std::max(den, cfg.eps_min);
    out.per_neighbor[k] = ratio;
    if (out.argmax < 0 || ratio > out.value) {
      out.value = ratio;
      out.argmax = k;
    }
  }
  return out;
}

Matrix map_rows(const Neighborhood& nb, const Predictor& model, bool logits) {
  Matrix out;
  for (Eigen::Index k = 0; k < nb.size(); ++k) {
    const ForwardTrace t = model.forward(nb.point(k));
    const Vector& v = logits ? t.logits : t.hidden_pre;
    if (k == 0) out.resize(nb.size(), v.size());
    out.row(k) = v.transpose();
  }
  return out;
}

}  // namespace

std::string_view to_string(DenomMode mode) {
  return mode == DenomMode::kElementwise ? "elementwise" : "norm_ratio";
}

DenomMode parse_denom_mode(std::string_view text) {
  if (text == "elementwise") return DenomMode::kElementwise;
  if (text == "norm_ratio" || text == "norm-ratio") return DenomMode::kNormRatio;
  throw InvalidInput("unknown denominator mode '" + std::string(text) +
                     "' (expected elementwise or norm-ratio)");
}

void MetricConfig::validate() const {
  if (!(eps_min > 0.0)) throw InvalidInput("eps_min must be positive");
  if (!(eps_div > 0.0)) throw InvalidInput("eps_div must be positive");
}

Vector percent_change(const Vector& a, const Vector& b, double eps_div) {
  if (a.size() != b.size()) throw InvalidInput("percent change of vectors of different length");
  Vector out(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double magnitude = std::max(std::abs(a[i]), eps_div);
    const double denom = a[i] < 0.0 ? -magnitude : magnitude;
    out[i] = (a[i] - b[i]) / denom;
  }
  return out;
}

MetricResult pointwise_lipschitz_stability(const Vector& e_x, const Matrix& neighbor_expl,
                                           const Vector& x, const Matrix& points, NormOrder p) {
  check_rows(e_x, neighbor_expl, x, points);
  MetricResult out;
  out.per_neighbor = Vector::Zero(points.rows());
  for (Eigen::Index k = 0; k < points.rows(); ++k) {
    const double dist = lp_norm(x - points.row(k).transpose(), p);
    if (dist == 0.0) {
      ++out.skipped;
      continue;
    }
    const double ratio = lp_norm(e_x - neighbor_expl.row(k).transpose(), p) / dist;
    out.per_neighbor[k] = ratio;
    if (out.argmax < 0 || ratio > out.value) {
      out.value = ratio;
      out.argmax = k;
    }
  }
  if (out.argmax < 0) out.value = std::numeric_limits<double>::quiet_NaN();
  return out;
}

MetricResult relative_input_stability(const Vector& e_x, const Matrix& neighbor_expl,
                                      const Vector& x, const Matrix& points,
                                      const MetricConfig& cfg) {
  return relative_metric(e_x, neighbor_expl, x, points, Denominator::kRelative, cfg);
}

MetricResult relative_representation_stability(const Vector& e_x, const Matrix& neighbor_expl,
                                               const Vector& rep_x, const Matrix& neighbor_reps,
                                               const MetricConfig& cfg) {
  return relative_metric(e_x, neighbor_expl, rep_x, neighbor_reps, Denominator::kRelative, cfg);
}

MetricResult relative_output_stability(const Vector& e_x, const Matrix& neighbor_expl,
                                       const Vector& logits_x, const Matrix& neighbor_logits,
                                       const MetricConfig& cfg) {
  return relative_metric(e_x, neighbor_expl, logits_x, neighbor_logits, Denominator::kAbsolute,
                         cfg);
}

void check_label_consistency(const Neighborhood& nb, const Predictor& model) {
  const Label anchor = model.predict(nb.anchor);
  for (Eigen::Index k = 0; k < nb.size(); ++k) {
    if (model.predict(nb.point(k)) != anchor) {
      throw InvalidInput("neighbor " + std::to_string(k) +
                         " is predicted differently from its anchor");
    }
  }
}

MetricResult relative_representation_stability(const Vector& e_x, const Matrix& neighbor_expl,
                                               const Neighborhood& nb, const Predictor& model,
                                               const MetricConfig& cfg) {
  check_label_consistency(nb, model);
  return relative_representation_stability(e_x, neighbor_expl, model.representation(nb.anchor),
                                           map_rows(nb, model, false), cfg);
}

MetricResult relative_output_stability(const Vector& e_x, const Matrix& neighbor_expl,
                                       const Neighborhood& nb, const Predictor& model,
                                       const MetricConfig& cfg) {
  check_label_consistency(nb, model);
  return relative_output_stability(e_x, neighbor_expl, model.logits(nb.anchor),
                                   map_rows(nb, model, true), cfg);
}

StabilityRecord score_point(std::int64_t point_id, Method method, const Vector& e_x,
                            const Matrix& neighbor_expl, const Neighborhood& nb,
                            const Predictor& model, const MetricConfig& cfg) {
  check_label_consistency(nb, model);
  const ForwardTrace anchor = model.forward(nb.anchor);
  Matrix reps(nb.size(), anchor.hidden_pre.size());
  Matrix logits(nb.size(), anchor.logits.size());
  for (Eigen::Index k = 0; k < nb.size(); ++k) {
    const ForwardTrace t = model.forward(nb.point(k));
    reps.row(k) = t.hidden_pre.transpose();
    logits.row(k) = t.logits.transpose();
  }

  const MetricResult ris = relative_input_stability(e_x, neighbor_expl, nb.anchor, nb.points, cfg);
  const MetricResult rrs =
      relative_representation_stability(e_x, neighbor_expl, anchor.hidden_pre, reps, cfg);
  const MetricResult ros = relative_output_stability(e_x, neighbor_expl, anchor.logits, logits, cfg);
  const MetricResult lip =
      pointwise_lipschitz_stability(e_x, neighbor_expl, nb.anchor, nb.points, cfg.p);

  StabilityRecord rec;
  rec.point_id = point_id;
  rec.method = method;
  rec.denom_mode = cfg.denom_mode;
  rec.ris = ris.value;
  rec.rrs = rrs.value;
  rec.ros = ros.value;
  rec.lipschitz = lip.value;
  rec.argmax_ris = ris.argmax;
  rec.argmax_rrs = rrs.argmax;
  rec.argmax_ros = ros.argmax;
  rec.skipped_ris = ris.skipped;
  rec.skipped_rrs = rrs.skipped;
  rec.skipped_ros = ros.skipped;
  rec.per_neighbor_ris = ris.per_neighbor;
  rec.per_neighbor_rrs = rrs.per_neighbor;
  rec.per_neighbor_ros = ros.per_neighbor;
  return rec;
}

}  // namespace relstab
