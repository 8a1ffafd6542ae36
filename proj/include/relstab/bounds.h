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

#ifndef RELSTAB_BOUNDS_H_
#define RELSTAB_BOUNDS_H_

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "relstab/common.h"
#include "relstab/explain.h"
#include "relstab/model.h"
#include "relstab/stability.h"

namespace relstab {

struct PowerIteration {
  double value = 0.0;  // largest singular value estimate
  int iterations = 0;
  double residual = 0.0;  // ||W^T W v - s^2 v|| / s^2 at exit
  bool converged = false;
};

// Power iteration on W^T W from a fixed-seed Gaussian start vector. Stops when
// the relative change of the estimate drops below `tol`.
PowerIteration spectral_norm(const Matrix& w, double tol = 1e-10, int max_iterations = 10000,
                             std::uint64_t seed = 0x5eed);

// p = 1: max column absolute sum; p = inf: max row absolute sum; p = 2: largest
// singular value. Throws NumericalError if power iteration does not converge.
double operator_norm(const Matrix& w, NormOrder p);

struct LayerLipschitz {
  double l1 = 0.0;  // input -> representation
  double l2 = 0.0;  // representation -> logits
  bool degenerate = false;  // some constant is zero
};

// MLP: L1 = ||W1||, L2 = ||W2|| (ReLU is 1-Lipschitz). LR: the representation
// is the logit layer itself, so L1 = ||W1|| and L2 = 1.
LayerLipschitz layer_lipschitz(const ModelArtifact& model, NormOrder p);

struct BoundRecord {
  std::int64_t point_id = 0;
  Method method = Method::kVanillaGrad;
  double l1 = 0.0;
  double l2 = 0.0;
  double lambda1 = 0.0;        // ||h1(x)|| / ||x||
  double lambda2 = 0.0;        // ||h1(x)||
  double lambda1_sound = 0.0;  // ||x|| / ||h1(x)||, the factor the algebra yields
  double ris = 0.0;
  double rrs = 0.0;
  double ros = 0.0;
  double bound_ris = 0.0;        // lambda1 * L1 * rrs
  double bound_rrs = 0.0;        // lambda2 * L2 * ros
  double bound_ris_sound = 0.0;  // lambda1_sound * L1 * rrs
  double bound_composite = 0.0;  // lambda1 * lambda2 * L1 * L2 * ros (reported only)
  double slack_ris = 0.0;        // bound / empirical, +inf when empirical is 0
  double slack_rrs = 0.0;
  bool violated_ris = false;
  bool violated_rrs = false;
  bool violated_ris_sound = false;
};

// True when empirical > bound * (1 + tol) + tol.
bool bound_violated(double empirical, double bound, double tol);

// `rec` must come from a norm_ratio metric pass; `x` and `rep_x` are the anchor
// and its first-layer representation.
BoundRecord verify_bound(const StabilityRecord& rec, const Vector& x, const Vector& rep_x,
                         const LayerLipschitz& lip, NormOrder p, double tol = 1e-9);

// `anchors[i]` is the anchor of `records[i]`.
std::vector<BoundRecord> verify_bounds(std::span<const StabilityRecord> records,
                                       std::span<const Vector> anchors,
                                       const ModelArtifact& model, NormOrder p,
                                       double tol = 1e-9);

struct SlackSummary {
  int count = 0;          // records with a finite positive slack
  int unbounded = 0;      // empirical value 0 (slack infinite)
  double geometric_mean = 0.0;
  double log_mean = 0.0;  // mean of ln(slack)
  double median = 0.0;
};

struct TightnessRow {
  int records = 0;
  int violations_ris = 0;
  int violations_rrs = 0;
  int violations_ris_sound = 0;
  SlackSummary ris;
  SlackSummary rrs;
};

SlackSummary summarize_slack(std::span<const double> slacks);

// Per-method aggregation of bound slack in log space.
std::map<Method, TightnessRow> tightness_summary(std::span<const BoundRecord> records);

}  // namespace relstab

#endif  // RELSTAB_BOUNDS_H_
