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

#include "relstab/common.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace relstab {

std::string_view to_string(NormOrder p) {
  switch (p) {
    case NormOrder::kL1:
      return "1";
    case NormOrder::kL2:
      return "2";
    case NormOrder::kLinf:
      return "inf";
  }
  return "?";
}

NormOrder parse_norm_order(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "1" || lower == "l1") return NormOrder::kL1;
  if (lower == "2" || lower == "l2") return NormOrder::kL2;
  if (lower == "inf" || lower == "linf" || lower == "infinity") return NormOrder::kLinf;
  throw InvalidInput("unsupported norm order '" + std::string(text) + "' (expected 1, 2 or inf)");
}

double lp_norm(const Eigen::Ref<const Vector>& v, NormOrder p) {
  switch (p) {
    case NormOrder::kL1:
      return v.cwiseAbs().sum();
    case NormOrder::kL2:
      return v.norm();
    case NormOrder::kLinf:
      return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
  }
  return std::nan("");
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a) {
  return mix64(mix64(parent) ^ a);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(parent, a), b);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  return derive_seed(derive_seed(parent, a, b), c);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace relstab
