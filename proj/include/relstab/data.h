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

#ifndef RELSTAB_DATA_H_
#define RELSTAB_DATA_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relstab/common.h"

namespace relstab {

enum class ColumnKind { kContinuous, kBinary };
enum class ColumnRole { kFeature, kLabel };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  ColumnRole role = ColumnRole::kFeature;

  bool operator==(const ColumnSpec&) const = default;
};

// Per-feature affine transform fitted on a training split. Binary columns and
// zero-variance columns are passed through (scale 1, offset 0).
struct Standardizer {
  Vector mean;
  Vector stddev;
  std::vector<bool> scaled;      // true when (x - mean) / stddev is applied
  std::vector<bool> degenerate;  // continuous column with stddev == 0

  Vector transform(const Eigen::Ref<const Vector>& x) const;
  Vector inverse(const Eigen::Ref<const Vector>& z) const;
  Matrix transform_rows(const Matrix& x) const;
  Matrix inverse_rows(const Matrix& z) const;
};

// Feature matrix plus labels. Immutable once built.
class Dataset {
 public:
  // `num_classes` <= 0 infers C as max(y) + 1. Throws InvalidInput when the
  // shapes disagree, a label is out of range, C < 2, or a binary column holds a
  // value other than 0/1.
  Dataset(Matrix x, std::vector<Label> y, std::vector<ColumnSpec> features,
          std::string label_name = "label", int num_classes = 0,
          std::vector<std::int64_t> row_ids = {});

  const Matrix& x() const { return x_; }
  const std::vector<Label>& y() const { return y_; }
  const std::vector<ColumnSpec>& features() const { return features_; }
  const std::string& label_name() const { return label_name_; }
  // Original row index (in the file or generator output) of every row.
  const std::vector<std::int64_t>& row_ids() const { return row_ids_; }
  const std::optional<Standardizer>& standardization() const { return standardization_; }

  Eigen::Index size() const { return x_.rows(); }
  Eigen::Index dim() const { return x_.cols(); }
  int num_classes() const { return num_classes_; }
  Vector row(Eigen::Index i) const { return x_.row(i).transpose(); }
  std::vector<bool> binary_mask() const;
  Vector feature_means() const;

  Dataset subset(std::span<const Eigen::Index> rows) const;
  Dataset standardized(const Standardizer& s) const;

 private:
  Matrix x_;
  std::vector<Label> y_;
  std::vector<ColumnSpec> features_;
  std::string label_name_;
  int num_classes_ = 0;
  std::vector<std::int64_t> row_ids_;
  std::optional<Standardizer> standardization_;
};

// Reads a JSON sidecar: [{"name": ..., "kind": "continuous"|"binary",
// "role": "feature"|"label"}, ...].
std::vector<ColumnSpec> load_schema(const std::filesystem::path& path);
std::vector<ColumnSpec> parse_schema(const std::string& json_text);

// Loads a comma-separated file with one header row. Columns not named in the
// schema are ignored; feature order follows the schema. Errors name the
// offending column and 1-based data row.
Dataset load_csv(const std::filesystem::path& path, const std::vector<ColumnSpec>& schema);
Dataset parse_csv(const std::string& text, const std::vector<ColumnSpec>& schema);

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Seeded permutation followed by contiguous cuts. Every split gets >= 1 row.
Splits split(const Dataset& ds, std::array<double, 3> ratios, std::uint64_t seed);

// Population (1/N) statistics over continuous columns of `train`.
Standardizer fit_standardizer(const Dataset& train);

// Two concentric rings: class 0 at radius 1, class 1 at radius `factor`.
Dataset make_circles(int n, double noise_std, double factor, std::uint64_t seed);

// Two isotropic Gaussian blobs centred at -separation/2 and +separation/2 on
// every axis (classes 0 and 1).
Dataset make_blobs(int n, int d, double separation, double stddev, std::uint64_t seed);

}  // namespace relstab

#endif  // RELSTAB_DATA_H_
