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

#ifndef RELSTAB_NEIGHBORHOOD_H_
#define RELSTAB_NEIGHBORHOOD_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "relstab/common.h"
#include "relstab/model.h"

namespace relstab {

struct NeighborhoodParams {
  double stddev = 0.05;  // Gaussian noise on continuous features
  double p_flip = 0.03;  // per-feature flip probability on binary features
  int max_attempts = 0;  // 0 means 100 * m
};

// Label-preserving perturbations of an anchor point.
struct Neighborhood {
  Vector anchor;
  Label anchor_label = 0;
  Matrix points;  // m x d, one perturbation per row
  NeighborhoodParams params;
  std::uint64_t seed = 0;
  int attempts = 0;  // candidates drawn to fill the neighborhood

  Eigen::Index size() const { return points.rows(); }
  Vector point(Eigen::Index i) const { return points.row(i).transpose(); }
};

// Raised when the rejection sampler runs out of attempts.
class AcceptanceExhausted : public Error {
 public:
  AcceptanceExhausted(int accepted, int attempts);

  int accepted_so_far() const { return accepted_; }
  int attempts() const { return attempts_; }

 private:
  int accepted_;
  int attempts_;
};

// Draws candidates until `m` of them share the anchor's predicted label.
// `binary_mask` marks features that are flipped instead of jittered; an empty
// mask treats every feature as continuous.
Neighborhood sample_neighborhood(const Predictor& model, const Vector& x, int m,
                                 const std::vector<bool>& binary_mask,
                                 const NeighborhoodParams& params, std::uint64_t seed);

double perturbation_distance(const Vector& x, const Vector& z, NormOrder p);

// Distance from the anchor to every row.
Vector realized_distances(const Neighborhood& nb, NormOrder p);

// Anchor first, then the m perturbations; one row per point.
void write_neighborhood_csv(const std::filesystem::path& path, const Neighborhood& nb);

}  // namespace relstab

#endif  // RELSTAB_NEIGHBORHOOD_H_
