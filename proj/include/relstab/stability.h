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

#ifndef RELSTAB_STABILITY_H_
#define RELSTAB_STABILITY_H_

#include <cstdint>
#include <string_view>

#include "relstab/common.h"
#include "relstab/explain.h"
#include "relstab/model.h"
#include "relstab/neighborhood.h"

namespace relstab {

// How the input and representation denominators are normalised.
//   kElementwise: || (a - b) / a ||_p with the guarded componentwise division.
//   kNormRatio:   || a - b ||_p / || a ||_p.
enum class DenomMode { kElementwise, kNormRatio };

std::string_view to_string(DenomMode mode);
DenomMode parse_denom_mode(std::string_view text);

struct MetricConfig {
  NormOrder p = NormOrder::kL2;
  double eps_min = 1e-6;  // lower clamp of every denominator
  double eps_div = 1e-8;  // guard for componentwise division by zero
  DenomMode denom_mode = DenomMode::kElementwise;

  void validate() const;
};

// (a_i - b_i) / (sign(a_i) * max(|a_i|, eps_div)) with sign(0) = +1.
Vector percent_change(const Vector& a, const Vector& b, double eps_div);

// Outcome of one metric over a neighborhood.
struct MetricResult {
  double value = 0.0;
  Eigen::Index argmax = -1;  // neighbor attaining `value`, -1 if none
  Vector per_neighbor;       // ratio per neighbor; skipped neighbors hold 0
  int skipped = 0;           // neighbors with 0 numerator and 0 denominator
};

// Explanations of the neighbors are stored one per row of `neighbor_expl`,
// aligned with the rows of `points` / `neighbor_reps` / `neighbor_logits`.

// max ||e_x - e_x'|| / ||x - x'||, neighbors at distance 0 skipped. The value
// is NaN when every neighbor coincides with x.
MetricResult pointwise_lipschitz_stability(const Vector& e_x, const Matrix& neighbor_expl,
                                           const Vector& x, const Matrix& points, NormOrder p);

MetricResult relative_input_stability(const Vector& e_x, const Matrix& neighbor_expl,
                                      const Vector& x, const Matrix& points,
                                      const MetricConfig& cfg);

MetricResult relative_representation_stability(const Vector& e_x, const Matrix& neighbor_expl,
                                               const Vector& rep_x, const Matrix& neighbor_reps,
                                               const MetricConfig& cfg);

// Denominator is the raw logit difference ||h(x) - h(x')||_p.
MetricResult relative_output_stability(const Vector& e_x, const Matrix& neighbor_expl,
                                       const Vector& logits_x, const Matrix& neighbor_logits,
                                       const MetricConfig& cfg);

// Model-aware overloads: check label consistency, then evaluate
// representations / logits through `model`.
MetricResult relative_representation_stability(const Vector& e_x, const Matrix& neighbor_expl,
                                               const Neighborhood& nb, const Predictor& model,
                                               const MetricConfig& cfg);
MetricResult relative_output_stability(const Vector& e_x, const Matrix& neighbor_expl,
                                       const Neighborhood& nb, const Predictor& model,
                                       const MetricConfig& cfg);

// Throws InvalidInput if any neighbor is predicted differently from the anchor.
void check_label_consistency(const Neighborhood& nb, const Predictor& model);

struct StabilityRecord {
  std::int64_t point_id = 0;
  Method method = Method::kVanillaGrad;
  DenomMode denom_mode = DenomMode::kElementwise;
  double ris = 0.0;
  double rrs = 0.0;
  double ros = 0.0;
  double lipschitz = 0.0;  // NaN when undefined
  Eigen::Index argmax_ris = -1;
  Eigen::Index argmax_rrs = -1;
  Eigen::Index argmax_ros = -1;
  int skipped_ris = 0;
  int skipped_rrs = 0;
  int skipped_ros = 0;
  Vector per_neighbor_ris;
  Vector per_neighbor_rrs;
  Vector per_neighbor_ros;
};

// All four metrics for one (anchor, method). Representations and logits of
// the anchor and neighbors are evaluated once through `model`.
StabilityRecord score_point(std::int64_t point_id, Method method, const Vector& e_x,
                            const Matrix& neighbor_expl, const Neighborhood& nb,
                            const Predictor& model, const MetricConfig& cfg);

}  // namespace relstab

#endif  // RELSTAB_STABILITY_H_
