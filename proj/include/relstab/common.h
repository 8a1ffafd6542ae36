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

#ifndef RELSTAB_COMMON_H_
#define RELSTAB_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace relstab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Label = int;

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed inputs: schema mismatches, bad CSV cells, invalid configs.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A numerical routine could not produce a usable result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Norm order used by the metrics and operator norms.
enum class NormOrder { kL1, kL2, kLinf };

std::string_view to_string(NormOrder p);
// Accepts "1", "2", "inf" (also "linf", "infinity").
NormOrder parse_norm_order(std::string_view text);

double lp_norm(const Eigen::Ref<const Vector>& v, NormOrder p);

// splitmix64 finalizer; the basis for every derived seed in the project.
std::uint64_t mix64(std::uint64_t x);

// Stable seed derivation from a parent seed and an ordered list of tags.
// Parallel workers use this so that scheduling order cannot leak into results.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c);

// FNV-1a over bytes; used for config hashes and stage tags.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace relstab

#endif  // RELSTAB_COMMON_H_
