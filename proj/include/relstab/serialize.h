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

#ifndef RELSTAB_SERIALIZE_H_
#define RELSTAB_SERIALIZE_H_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "relstab/bounds.h"
#include "relstab/explain.h"
#include "relstab/model.h"
#include "relstab/stability.h"

namespace relstab {

using Json = nlohmann::ordered_json;

// Non-finite doubles are written as null; reading null yields NaN (or +inf
// where the field is a slack ratio).
Json real_to_json(double v);
double real_from_json(const Json& j, double null_value);

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

// {kind, shapes, row-major weight arrays, seed, training_meta}
Json model_to_json(const ModelArtifact& model);
// Validates shapes against the declared ones.
ModelArtifact model_from_json(const Json& j);
void save_model(const std::filesystem::path& path, const ModelArtifact& model);
ModelArtifact load_model(const std::filesystem::path& path);

// Only the hyperparameters that belong to the method.
Json hyper_to_json(const ExplainerConfig& cfg);
Json explainer_to_json(const ExplainerConfig& cfg);
ExplainerConfig explainer_from_json(const Json& j);
// {method, target, seed, hyper, values[]}
Json attribution_to_json(const Attribution& a);

Json metric_config_to_json(const MetricConfig& cfg);
MetricConfig metric_config_from_json(const Json& j);

Json stability_record_to_json(const StabilityRecord& r, const std::string& config_hash,
                              bool per_neighbor = true);
StabilityRecord stability_record_from_json(const Json& j);

Json bound_record_to_json(const BoundRecord& b);
BoundRecord bound_record_from_json(const Json& j);

std::string stability_csv_header();
std::string stability_csv_row(const StabilityRecord& r, const std::string& config_hash);
std::string bound_csv_header();
std::string bound_csv_row(const BoundRecord& b);

// One JSON document per non-empty line.
std::vector<Json> read_jsonl(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace relstab

#endif  // RELSTAB_SERIALIZE_H_
