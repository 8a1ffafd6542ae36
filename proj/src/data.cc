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

#include "relstab/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace relstab {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_real(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

void check_schema(const std::vector<ColumnSpec>& schema) {
  const auto labels = std::count_if(schema.begin(), schema.end(), [](const ColumnSpec& c) {
    return c.role == ColumnRole::kLabel;
  });
  if (labels != 1) {
    throw InvalidInput("schema must declare exactly one label column, found " +
                       std::to_string(labels));
  }
  if (schema.size() < 2) throw InvalidInput("schema needs at least one feature column");
}

}  // namespace

Vector Standardizer::transform(const Eigen::Ref<const Vector>& x) const {
  Vector z = x;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    if (scaled[j]) z[j] = (x[j] - mean[j]) / stddev[j];
  }
  return z;
}

Vector Standardizer::inverse(const Eigen::Ref<const Vector>& z) const {
  Vector x = z;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (scaled[j]) x[j] = z[j] * stddev[j] + mean[j];
  }
  return x;
}

Matrix Standardizer::transform_rows(const Matrix& x) const {
  Matrix z = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) z.row(i) = transform(Vector(x.row(i).transpose())).transpose();
  return z;
}

Matrix Standardizer::inverse_rows(const Matrix& z) const {
  Matrix x = z;
  for (Eigen::Index i = 0; i < z.rows(); ++i) x.row(i) = inverse(Vector(z.row(i).transpose())).transpose();
  return x;
}

Dataset::Dataset(Matrix x, std::vector<Label> y, std::vector<ColumnSpec> features,
                 std::string label_name, int num_classes, std::vector<std::int64_t> row_ids)
    : x_(std::move(x)),
      y_(std::move(y)),
      features_(std::move(features)),
      label_name_(std::move(label_name)),
      row_ids_(std::move(row_ids)) {
  if (static_cast<std::size_t>(x_.rows()) != y_.size()) {
    throw InvalidInput("feature matrix has " + std::to_string(x_.rows()) + " rows but " +
                       std::to_string(y_.size()) + " labels");
  }
  if (static_cast<std::size_t>(x_.cols()) != features_.size()) {
    throw InvalidInput("feature matrix has " + std::to_string(x_.cols()) +
                       " columns but schema lists " + std::to_string(features_.size()));
  }
  if (row_ids_.empty()) {
    row_ids_.resize(y_.size());
    std::iota(row_ids_.begin(), row_ids_.end(), 0);
  } else if (row_ids_.size() != y_.size()) {
    throw InvalidInput("row id count does not match row count");
  }
  Label max_label = -1;
  for (std::size_t i = 0; i < y_.size(); ++i) {
    if (y_[i] < 0) throw InvalidInput("negative label at row " + std::to_string(i + 1));
    max_label = std::max(max_label, y_[i]);
  }
  num_classes_ = num_classes > 0 ? num_classes : max_label + 1;
  if (num_classes_ < 2) throw InvalidInput("dataset needs at least 2 classes");
  if (max_label >= num_classes_) throw InvalidInput("label exceeds declared class count");
  for (std::size_t j = 0; j < features_.size(); ++j) {
    if (features_[j].kind != ColumnKind::kBinary) continue;
    for (Eigen::Index i = 0; i < x_.rows(); ++i) {
      const double v = x_(i, static_cast<Eigen::Index>(j));
      if (v != 0.0 && v != 1.0) {
        throw InvalidInput("binary column '" + features_[j].name + "' has value " +
                           std::to_string(v) + " at row " + std::to_string(i + 1));
      }
    }
  }
}

std::vector<bool> Dataset::binary_mask() const {
  std::vector<bool> mask(features_.size());
  for (std::size_t j = 0; j < features_.size(); ++j) {
    mask[j] = features_[j].kind == ColumnKind::kBinary;
  }
  return mask;
}

Vector Dataset::feature_means() const {
  if (x_.rows() == 0) return Vector::Zero(x_.cols());
  return x_.colwise().mean().transpose();
}

Dataset Dataset::subset(std::span<const Eigen::Index> rows) const {
  Matrix x(static_cast<Eigen::Index>(rows.size()), x_.cols());
  std::vector<Label> y(rows.size());
  std::vector<std::int64_t> ids(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    x.row(static_cast<Eigen::Index>(k)) = x_.row(rows[k]);
    y[k] = y_[static_cast<std::size_t>(rows[k])];
    ids[k] = row_ids_[static_cast<std::size_t>(rows[k])];
  }
  Dataset out(std::move(x), std::move(y), features_, label_name_, num_classes_, std::move(ids));
  out.standardization_ = standardization_;
  return out;
}

Dataset Dataset::standardized(const Standardizer& s) const {
  if (s.mean.size() != x_.cols()) throw InvalidInput("standardizer dimension mismatch");
  Dataset out(s.transform_rows(x_), y_, features_, label_name_, num_classes_, row_ids_);
  out.standardization_ = s;
  return out;
}

std::vector<ColumnSpec> parse_schema(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("schema is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw InvalidInput("schema must be a JSON array");
  std::vector<ColumnSpec> out;
  for (const auto& item : doc) {
    ColumnSpec c;
    c.name = item.at("name").get<std::string>();
    const std::string kind = item.value("kind", "continuous");
    if (kind == "continuous") {
      c.kind = ColumnKind::kContinuous;
    } else if (kind == "binary") {
      c.kind = ColumnKind::kBinary;
    } else {
      throw InvalidInput("column '" + c.name + "': unknown kind '" + kind + "'");
    }
    const std::string role = item.value("role", "feature");
    if (role == "feature") {
      c.role = ColumnRole::kFeature;
    } else if (role == "label") {
      c.role = ColumnRole::kLabel;
    } else {
      throw InvalidInput("column '" + c.name + "': unknown role '" + role + "'");
    }
    out.push_back(std::move(c));
  }
  check_schema(out);
  return out;
}

std::vector<ColumnSpec> load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open schema file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_schema(buffer.str());
}

Dataset parse_csv(const std::string& text, const std::vector<ColumnSpec>& schema) {
  check_schema(schema);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("CSV is empty (no header row)");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto header = split_fields(line);
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) position.emplace(std::string(header[i]), i);

  std::vector<std::string> missing;
  std::vector<std::size_t> source;  // file column per schema entry
  for (const auto& c : schema) {
    auto it = position.find(c.name);
    if (it == position.end()) {
      missing.push_back(c.name);
    } else {
      source.push_back(it->second);
    }
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw InvalidInput("CSV header is missing schema column(s): " + names);
  }

  std::vector<ColumnSpec> features;
  std::string label_name;
  for (const auto& c : schema) {
    if (c.role == ColumnRole::kFeature) {
      features.push_back(c);
    } else {
      label_name = c.name;
    }
  }

  std::vector<double> values;
  std::vector<Label> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw InvalidInput("row " + std::to_string(row) + ": expected " +
                         std::to_string(header.size()) + " fields, found " +
                         std::to_string(fields.size()));
    }
    for (std::size_t k = 0; k < schema.size(); ++k) {
      const ColumnSpec& c = schema[k];
      const std::string_view cell = fields[source[k]];
      const auto value = parse_real(cell);
      if (!value) {
        throw InvalidInput("column '" + c.name + "', row " + std::to_string(row) +
                           ": non-numeric cell '" + std::string(cell) + "'");
      }
      if (c.kind == ColumnKind::kBinary && *value != 0.0 && *value != 1.0) {
        throw InvalidInput("column '" + c.name + "', row " + std::to_string(row) +
                           ": binary column holds '" + std::string(cell) + "'");
      }
      if (c.role == ColumnRole::kLabel) {
        if (*value < 0 || *value != std::floor(*value)) {
          throw InvalidInput("column '" + c.name + "', row " + std::to_string(row) +
                             ": label must be a non-negative integer, got '" +
                             std::string(cell) + "'");
        }
        labels.push_back(static_cast<Label>(*value));
      } else {
        values.push_back(*value);
      }
    }
  }

  const auto n = static_cast<Eigen::Index>(labels.size());
  const auto d = static_cast<Eigen::Index>(features.size());
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = values[static_cast<std::size_t>(i * d + j)];
  }
  return Dataset(std::move(x), std::move(labels), std::move(features), label_name);
}

Dataset load_csv(const std::filesystem::path& path, const std::vector<ColumnSpec>& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open CSV file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), schema);
}

Splits split(const Dataset& ds, std::array<double, 3> ratios, std::uint64_t seed) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9 || ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0) {
    throw InvalidInput("split ratios must be non-negative and sum to 1");
  }
  const Eigen::Index n = ds.size();
  if (n < 10) throw InvalidInput("split needs at least 10 rows, got " + std::to_string(n));
  const auto n_train = static_cast<Eigen::Index>(std::llround(ratios[0] * static_cast<double>(n)));
  const auto n_val = static_cast<Eigen::Index>(std::llround(ratios[1] * static_cast<double>(n)));
  const Eigen::Index n_test = n - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    throw InvalidInput("dataset of " + std::to_string(n) +
                       " rows is too small to give every split at least one row");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the permutation depends only on the seed.
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }
  const std::span<const Eigen::Index> all(order);
  return Splits{ds.subset(all.subspan(0, static_cast<std::size_t>(n_train))),
                ds.subset(all.subspan(static_cast<std::size_t>(n_train),
                                      static_cast<std::size_t>(n_val))),
                ds.subset(all.subspan(static_cast<std::size_t>(n_train + n_val)))};
}

Standardizer fit_standardizer(const Dataset& train) {
  if (train.size() < 2) throw InvalidInput("standardizer needs at least 2 training rows");
  const Eigen::Index d = train.dim();
  Standardizer s;
  s.mean = Vector::Zero(d);
  s.stddev = Vector::Ones(d);
  s.scaled.assign(static_cast<std::size_t>(d), false);
  s.degenerate.assign(static_cast<std::size_t>(d), false);
  const auto n = static_cast<double>(train.size());
  for (Eigen::Index j = 0; j < d; ++j) {
    if (train.features()[static_cast<std::size_t>(j)].kind == ColumnKind::kBinary) continue;
    const auto col = train.x().col(j);
    const double mu = col.sum() / n;
    const double var = (col.array() - mu).square().sum() / n;
    const double sigma = std::sqrt(var);
    if (sigma == 0.0) {
      s.degenerate[static_cast<std::size_t>(j)] = true;
      continue;
    }
    s.mean[j] = mu;
    s.stddev[j] = sigma;
    s.scaled[static_cast<std::size_t>(j)] = true;
  }
  return s;
}

Dataset make_circles(int n, double noise_std, double factor, std::uint64_t seed) {
  if (n <= 0 || n % 2 != 0) throw InvalidInput("make_circles needs a positive even n");
  if (!(factor > 0.0 && factor < 1.0)) throw InvalidInput("make_circles factor must be in (0, 1)");
  if (noise_std < 0.0) throw InvalidInput("make_circles noise_std must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix x(n, 2);
  std::vector<Label> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const bool inner = i >= n / 2;
    const double r = inner ? factor : 1.0;
    const double t = angle(rng);
    x(i, 0) = r * std::cos(t);
    x(i, 1) = r * std::sin(t);
    y[static_cast<std::size_t>(i)] = inner ? 1 : 0;
  }
  if (noise_std > 0.0) {
    for (int i = 0; i < n; ++i) {
      x(i, 0) += noise_std * noise(rng);
      x(i, 1) += noise_std * noise(rng);
    }
  }
  return Dataset(std::move(x), std::move(y),
                 {ColumnSpec{"x0", ColumnKind::kContinuous, ColumnRole::kFeature},
                  ColumnSpec{"x1", ColumnKind::kContinuous, ColumnRole::kFeature}});
}

Dataset make_blobs(int n, int d, double separation, double stddev, std::uint64_t seed) {
  if (n <= 0 || n % 2 != 0) throw InvalidInput("make_blobs needs a positive even n");
  if (d < 1) throw InvalidInput("make_blobs needs d >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix x(n, d);
  std::vector<Label> y(static_cast<std::size_t>(n));
  std::vector<ColumnSpec> features;
  for (int j = 0; j < d; ++j) features.push_back({"x" + std::to_string(j)});
  for (int i = 0; i < n; ++i) {
    const bool positive = i >= n / 2;
    const double centre = (positive ? 0.5 : -0.5) * separation;
    for (int j = 0; j < d; ++j) x(i, j) = centre + stddev * noise(rng);
    y[static_cast<std::size_t>(i)] = positive ? 1 : 0;
  }
  return Dataset(std::move(x), std::move(y), std::move(features));
}

}  // namespace relstab
