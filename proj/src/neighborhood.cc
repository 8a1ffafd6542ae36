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

#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <string>

namespace relstab {

AcceptanceExhausted::AcceptanceExhausted(int accepted, int attempts)
    : Error("neighborhood acceptance exhausted: accepted " + std::to_string(accepted) +
            " perturbations after " + std::to_string(attempts) + " attempts"),
      accepted_(accepted),
      attempts_(attempts) {}

Neighborhood sample_neighborhood(const Predictor& model, const Vector& x, int m,
                                 const std::vector<bool>& binary_mask,
                                 const NeighborhoodParams& params, std::uint64_t seed) {
  const Eigen::Index d = x.size();
  if (d != model.input_dim()) throw InvalidInput("anchor dimension mismatch");
  if (m < 1) throw InvalidInput("neighborhood size must be >= 1");
  if (!binary_mask.empty() && static_cast<Eigen::Index>(binary_mask.size()) != d) {
    throw InvalidInput("binary mask length does not match the feature count");
  }
  if (params.stddev < 0.0 || params.p_flip < 0.0 || params.p_flip > 1.0) {
    throw InvalidInput("invalid perturbation parameters");
  }
  if (!x.allFinite()) throw InvalidInput("anchor contains non-finite values");

  Neighborhood nb;
  nb.anchor = x;
  nb.anchor_label = model.predict(x);
  nb.params = params;
  nb.params.max_attempts = params.max_attempts > 0 ? params.max_attempts : 100 * m;
  nb.seed = seed;
  nb.points.resize(m, d);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Vector candidate(d);
  int accepted = 0;
  while (accepted < m) {
    if (nb.attempts >= nb.params.max_attempts) throw AcceptanceExhausted(accepted, nb.attempts);
    ++nb.attempts;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!binary_mask.empty() && binary_mask[static_cast<std::size_t>(i)]) {
        candidate[i] = coin(rng) < params.p_flip ? 1.0 - x[i] : x[i];
      } else {
        candidate[i] = x[i] + params.stddev * noise(rng);
      }
    }
    if (model.predict(candidate) != nb.anchor_label) continue;
    nb.points.row(accepted++) = candidate.transpose();
  }
  return nb;
}

double perturbation_distance(const Vector& x, const Vector& z, NormOrder p) {
  if (x.size() != z.size()) throw InvalidInput("distance between vectors of different length");
  return lp_norm(x - z, p);
}

Vector realized_distances(const Neighborhood& nb, NormOrder p) {
  Vector out(nb.size());
  for (Eigen::Index i = 0; i < nb.size(); ++i) out[i] = perturbation_distance(nb.anchor, nb.point(i), p);
  return out;
}

void write_neighborhood_csv(const std::filesystem::path& path, const Neighborhood& nb) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "role";
  for (Eigen::Index j = 0; j < nb.anchor.size(); ++j) out << ",x" << j;
  out << '\n';
  auto write_row = [&out](const char* role, const auto& row) {
    out << role;
    for (Eigen::Index j = 0; j < row.size(); ++j) out << ',' << row[j];
    out << '\n';
  };
  write_row("anchor", nb.anchor);
  for (Eigen::Index i = 0; i < nb.size(); ++i) write_row("perturbation", nb.point(i));
}

}  // namespace relstab
