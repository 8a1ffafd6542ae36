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

#ifndef RELSTAB_HARNESS_H_
#define RELSTAB_HARNESS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relstab/bounds.h"
#include "relstab/data.h"
#include "relstab/explain.h"
#include "relstab/model.h"
#include "relstab/neighborhood.h"
#include "relstab/serialize.h"
#include "relstab/stability.h"

namespace relstab {

// Raised when a pipeline stage fails; carries the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct DatasetSource {
  enum class Kind { kCsv, kCircles, kBlobs };
  Kind kind = Kind::kCircles;
  std::filesystem::path csv_path;
  std::filesystem::path schema_path;
  int n = 1000;
  double noise_std = 0.05;  // circles
  double factor = 0.5;      // circles
  int dim = 2;              // blobs
  double separation = 5.0;  // blobs
  double blob_std = 0.5;    // blobs
};

struct ExperimentConfig {
  DatasetSource dataset;
  ModelKind model = ModelKind::kMlp;
  int hidden_width = 100;
  TrainConfig training;
  std::optional<std::filesystem::path> model_path;  // load instead of training
  std::uint64_t seed = 0;
  std::array<double, 3> split_ratios = {0.8, 0.1, 0.1};
  int n_test_points = 100;
  int m_perturbations = 50;
  NeighborhoodParams neighborhood;
  std::vector<ExplainerConfig> explainers;  // empty means all seven
  MetricConfig metric;
  double bound_tol = 1e-9;
  int workers = 1;
  bool dump_neighborhoods = false;
  std::filesystem::path output_dir = "results";

  // Throws InvalidInput (missing files, bad sizes, empty explainer list...).
  void validate() const;
  std::vector<ExplainerConfig> effective_explainers() const;
};

Json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
// Hash of the settings that determine record contents (workers, output
// directory and debug flags excluded), as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

struct PreparedData {
  Splits splits;  // standardized with statistics from the train split
  Standardizer standardizer;
};

PreparedData prepare_data(const ExperimentConfig& cfg);
ModelArtifact train_model(const ExperimentConfig& cfg, const PreparedData& data);

struct SkippedAnchor {
  std::int64_t point_id = 0;
  int accepted = 0;
  int attempts = 0;
};

struct RunResult {
  ModelArtifact model;
  std::vector<std::int64_t> anchor_ids;  // anchors that produced records, in order
  std::vector<StabilityRecord> elementwise;
  std::vector<StabilityRecord> norm_ratio;
  std::vector<BoundRecord> bounds;
  std::vector<SkippedAnchor> skipped;
  Json manifest;
};

// Train (or load), sample anchors, build neighborhoods, explain, score and
// verify bounds. Writes model.json, config.json, manifest.json,
// stability_{elementwise,norm_ratio}.{jsonl,csv} and bounds.{jsonl,csv} into
// cfg.output_dir.
RunResult run_experiment(const ExperimentConfig& cfg);

// Runs fn(i) for i in [0, n) on `workers` threads. The first exception thrown
// by any task is rethrown after all workers join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

struct LogStats {
  int count = 0;
  int zero_count = 0;
  double median = 0.0;  // all statistics are log10 of values clamped at 1e-300
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Linear-interpolated quantile of a sorted sample.
double quantile(const std::vector<double>& sorted, double q);
LogStats log_stats(std::vector<double> values);

struct Summary {
  std::string denom_mode;
  std::vector<Method> methods;
  // metric name ("RIS", "RRS", "ROS", "Lipschitz") -> method -> stats;
  // absent entries are methods without records.
  std::map<std::string, std::map<Method, LogStats>> cells;
  std::vector<Method> rank_rrs;  // ascending median (most stable first)
  std::vector<Method> rank_ros;
  std::map<Method, TightnessRow> tightness;
};

Summary summarize_records(const std::vector<StabilityRecord>& records,
                          const std::vector<BoundRecord>& bounds,
                          const std::vector<Method>& methods, DenomMode mode);
Summary summarize(const std::filesystem::path& results_dir, DenomMode mode);
Json summary_to_json(const Summary& s);
std::string format_summary(const Summary& s);

struct BoundCheck {
  int records = 0;
  int violations_ris = 0;
  int violations_rrs = 0;
  int violations_ris_sound = 0;
  int mismatched = 0;  // bound rows disagreeing with the norm_ratio stability file
};

// Re-checks every persisted bound record with tolerance `tol`.
BoundCheck check_bounds(const std::filesystem::path& results_dir, double tol);

struct CirclesReportConfig {
  DatasetSource dataset;  // circles by default; blobs for the linear sanity run
  ModelKind model = ModelKind::kMlp;
  int hidden_width = 100;
  TrainConfig training;
  std::uint64_t seed = 0;
  int n_anchors = 50;
  int m_perturbations = 50;
  NeighborhoodParams neighborhood;
  int grid_resolution = 60;
  double min_val_accuracy = 0.95;
  std::filesystem::path output_dir = "circles";
};

struct CirclesReport {
  double val_accuracy = 0.0;
  bool training_ok = false;
  int n_anchors = 0;
  int n_perturbations = 0;
  int opposite_count = 0;
  double opposite_fraction = 0.0;         // perturbations nearer the other class centroid
  double anchor_opposite_fraction = 0.0;  // same test applied to the anchors themselves
  std::vector<Vector> centroids;          // per-class mean representation on the train split
};

// Class-centroid analysis of label-preserving perturbations in the first-layer
// embedding. Writes report.json, heatmap.csv (model confidence over a grid) and
// embeddings.csv. Throws StageError("train", ...) if validation accuracy stays
// below cfg.min_val_accuracy.
CirclesReport circles_report(const CirclesReportConfig& cfg);

}  // namespace relstab

#endif  // RELSTAB_HARNESS_H_
