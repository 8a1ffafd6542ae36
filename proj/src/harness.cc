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

#include "relstab/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace relstab {
namespace {

constexpr const char* kVersion = "relstab 1.0.0";

std::uint64_t tag(std::string_view name) { return fnv1a64(name); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string_view to_string(DatasetSource::Kind kind) {
  switch (kind) {
    case DatasetSource::Kind::kCsv:
      return "csv";
    case DatasetSource::Kind::kCircles:
      return "circles";
    case DatasetSource::Kind::kBlobs:
      return "blobs";
  }
  return "?";
}

Json dataset_to_json(const DatasetSource& d) {
  Json j{{"source", std::string(to_string(d.kind))}};
  if (d.kind == DatasetSource::Kind::kCsv) {
    j["path"] = d.csv_path.string();
    j["schema"] = d.schema_path.string();
  } else {
    j["n"] = d.n;
    if (d.kind == DatasetSource::Kind::kCircles) {
      j["noise_std"] = d.noise_std;
      j["factor"] = d.factor;
    } else {
      j["dim"] = d.dim;
      j["separation"] = d.separation;
      j["std"] = d.blob_std;
    }
  }
  return j;
}

DatasetSource dataset_from_json(const Json& j) {
  DatasetSource d;
  const std::string source = j.value("source", "circles");
  if (source == "csv") {
    d.kind = DatasetSource::Kind::kCsv;
    d.csv_path = j.at("path").get<std::string>();
    d.schema_path = j.at("schema").get<std::string>();
  } else if (source == "circles") {
    d.kind = DatasetSource::Kind::kCircles;
  } else if (source == "blobs") {
    d.kind = DatasetSource::Kind::kBlobs;
  } else {
    throw InvalidInput("unknown dataset source '" + source + "'");
  }
  d.n = j.value("n", d.n);
  d.noise_std = j.value("noise_std", d.noise_std);
  d.factor = j.value("factor", d.factor);
  d.dim = j.value("dim", d.dim);
  d.separation = j.value("separation", d.separation);
  d.blob_std = j.value("std", d.blob_std);
  return d;
}

Dataset load_dataset(const DatasetSource& src, std::uint64_t seed) {
  switch (src.kind) {
    case DatasetSource::Kind::kCsv:
      return load_csv(src.csv_path, load_schema(src.schema_path));
    case DatasetSource::Kind::kCircles:
      return make_circles(src.n, src.noise_std, src.factor, seed);
    case DatasetSource::Kind::kBlobs:
      return make_blobs(src.n, src.dim, src.separation, src.blob_std, seed);
  }
  throw InvalidInput("unknown dataset source");
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct AnchorOutput {
  bool skipped = false;
  SkippedAnchor skip;
  std::vector<StabilityRecord> elementwise;
  std::vector<StabilityRecord> norm_ratio;
  std::vector<BoundRecord> bounds;
};

double median_sorted(const std::vector<double>& v) { return quantile(v, 0.5); }

}  // namespace

StageError::StageError(std::string stage, const std::string& what)
    : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}

void ExperimentConfig::validate() const {
  if (dataset.kind == DatasetSource::Kind::kCsv) {
    if (!std::filesystem::exists(dataset.csv_path)) {
      throw InvalidInput("dataset file does not exist: " + dataset.csv_path.string());
    }
    if (!std::filesystem::exists(dataset.schema_path)) {
      throw InvalidInput("schema file does not exist: " + dataset.schema_path.string());
    }
  } else if (dataset.n < 10 || dataset.n % 2 != 0) {
    throw InvalidInput("synthetic dataset size must be an even number >= 10");
  }
  if (model_path && !std::filesystem::exists(*model_path)) {
    throw InvalidInput("model file does not exist: " + model_path->string());
  }
  if (model == ModelKind::kMlp && hidden_width < 1) throw InvalidInput("hidden_width must be >= 1");
  if (training.epochs < 0 || training.batch_size < 1 || !(training.learning_rate > 0.0)) {
    throw InvalidInput("invalid training settings");
  }
  if (n_test_points < 1) throw InvalidInput("n_test_points must be >= 1");
  if (m_perturbations < 1) throw InvalidInput("m_perturbations must be >= 1");
  if (workers < 1) throw InvalidInput("workers must be >= 1");
  if (!(bound_tol >= 0.0)) throw InvalidInput("bound_tol must be >= 0");
  metric.validate();
  std::set<Method> seen;
  for (const auto& e : explainers) {
    if (!seen.insert(e.method).second) {
      throw InvalidInput("explainer '" + std::string(to_string(e.method)) + "' listed twice");
    }
  }
}

std::vector<ExplainerConfig> ExperimentConfig::effective_explainers() const {
  if (!explainers.empty()) return explainers;
  std::vector<ExplainerConfig> all;
  for (Method m : kAllMethods) {
    ExplainerConfig e;
    e.method = m;
    all.push_back(e);
  }
  return all;
}

Json config_to_json(const ExperimentConfig& cfg) {
  Json explainers = Json::array();
  for (const auto& e : cfg.effective_explainers()) explainers.push_back(explainer_to_json(e));
  Json metric = metric_config_to_json(cfg.metric);
  metric.erase("denom_mode");  // both modes are always computed
  Json j{{"dataset", dataset_to_json(cfg.dataset)},
         {"model", std::string(to_string(cfg.model))},
         {"hidden_width", cfg.hidden_width},
         {"training",
          {{"learning_rate", cfg.training.learning_rate},
           {"batch_size", cfg.training.batch_size},
           {"epochs", cfg.training.epochs},
           {"rms_decay", cfg.training.rms_decay},
           {"rms_epsilon", cfg.training.rms_epsilon}}},
         {"seed", cfg.seed},
         {"split", Json::array({cfg.split_ratios[0], cfg.split_ratios[1], cfg.split_ratios[2]})},
         {"n_test_points", cfg.n_test_points},
         {"m_perturbations", cfg.m_perturbations},
         {"neighborhood",
          {{"std", cfg.neighborhood.stddev},
           {"p_flip", cfg.neighborhood.p_flip},
           {"max_attempts", cfg.neighborhood.max_attempts}}},
         {"explainers", explainers},
         {"metric", metric},
         {"bound_tol", cfg.bound_tol},
         {"workers", cfg.workers},
         {"dump_neighborhoods", cfg.dump_neighborhoods},
         {"output_dir", cfg.output_dir.string()}};
  if (cfg.model_path) j["model_path"] = cfg.model_path->string();
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  try {
    ExperimentConfig cfg;
    if (j.contains("dataset")) cfg.dataset = dataset_from_json(j["dataset"]);
    if (j.contains("model")) cfg.model = parse_model_kind(j["model"].get<std::string>());
    cfg.hidden_width = j.value("hidden_width", cfg.hidden_width);
    if (j.contains("training")) {
      const Json& t = j["training"];
      cfg.training.learning_rate = t.value("learning_rate", cfg.training.learning_rate);
      cfg.training.batch_size = t.value("batch_size", cfg.training.batch_size);
      cfg.training.epochs = t.value("epochs", cfg.training.epochs);
      cfg.training.rms_decay = t.value("rms_decay", cfg.training.rms_decay);
      cfg.training.rms_epsilon = t.value("rms_epsilon", cfg.training.rms_epsilon);
    }
    if (j.contains("model_path")) cfg.model_path = j["model_path"].get<std::string>();
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("split")) {
      const Json& s = j["split"];
      if (!s.is_array() || s.size() != 3) throw InvalidInput("split must be [train, val, test]");
      for (std::size_t i = 0; i < 3; ++i) cfg.split_ratios[i] = s[i].get<double>();
    }
    cfg.n_test_points = j.value("n_test_points", cfg.n_test_points);
    cfg.m_perturbations = j.value("m_perturbations", cfg.m_perturbations);
    if (j.contains("neighborhood")) {
      const Json& n = j["neighborhood"];
      cfg.neighborhood.stddev = n.value("std", cfg.neighborhood.stddev);
      cfg.neighborhood.p_flip = n.value("p_flip", cfg.neighborhood.p_flip);
      cfg.neighborhood.max_attempts = n.value("max_attempts", cfg.neighborhood.max_attempts);
    }
    if (j.contains("explainers")) {
      for (const auto& e : j["explainers"]) {
        cfg.explainers.push_back(e.is_string() ? explainer_from_json(Json{{"method", e}})
                                               : explainer_from_json(e));
      }
    }
    if (j.contains("metric")) cfg.metric = metric_config_from_json(j["metric"]);
    cfg.bound_tol = j.value("bound_tol", cfg.bound_tol);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.dump_neighborhoods = j.value("dump_neighborhoods", cfg.dump_neighborhoods);
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    return cfg;
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig cfg = config_from_json(read_json(path));
  // Relative data paths are resolved against the config file's directory.
  const auto base = path.parent_path();
  auto resolve = [&base](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative() && !std::filesystem::exists(p)) p = base / p;
  };
  resolve(cfg.dataset.csv_path);
  resolve(cfg.dataset.schema_path);
  if (cfg.model_path) resolve(*cfg.model_path);
  return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
  Json j = config_to_json(cfg);
  j.erase("workers");
  j.erase("output_dir");
  j.erase("dump_neighborhoods");
  return hex64(fnv1a64(j.dump()));
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  const Dataset raw = load_dataset(cfg.dataset, derive_seed(cfg.seed, tag("data")));
  Splits parts = split(raw, cfg.split_ratios, derive_seed(cfg.seed, tag("split")));
  Standardizer s = fit_standardizer(parts.train);
  return PreparedData{Splits{parts.train.standardized(s), parts.val.standardized(s),
                             parts.test.standardized(s)},
                      s};
}

ModelArtifact train_model(const ExperimentConfig& cfg, const PreparedData& data) {
  const Dataset& train_set = data.splits.train;
  if (cfg.model_path) {
    ModelArtifact m = load_model(*cfg.model_path);
    if (m.input_dim() != train_set.dim()) throw InvalidInput("loaded model dimension mismatch");
    return m;
  }
  const ModelArtifact init = init_model(cfg.model, train_set.dim(), train_set.num_classes(),
                                        cfg.hidden_width, derive_seed(cfg.seed, tag("model")));
  return train(init, train_set, data.splits.val, cfg.training);
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(std::max(workers, 1), std::max<std::size_t>(n, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  stage("config", [&] { cfg.validate(); });
  const std::string hash = config_hash(cfg);
  const auto& out_dir = cfg.output_dir;
  stage("output", [&] { std::filesystem::create_directories(out_dir); });

  const PreparedData data = stage("data", [&] { return prepare_data(cfg); });
  RunResult result;
  result.model = stage("train", [&] { return train_model(cfg, data); });
  const ModelPredictor predictor(result.model);
  const LayerLipschitz lip = stage("lipschitz", [&] { return layer_lipschitz(result.model, cfg.metric.p); });

  const Dataset& test = data.splits.test;
  const Vector baseline = data.splits.train.feature_means();
  std::vector<ExplainerConfig> explainers = cfg.effective_explainers();
  for (auto& e : explainers) {
    if (e.method == Method::kIntegratedGradients || e.method == Method::kKernelShap) e.baseline = baseline;
  }

  // Anchors: uniform sample of the test split without replacement.
  std::vector<Eigen::Index> anchors(static_cast<std::size_t>(test.size()));
  std::iota(anchors.begin(), anchors.end(), 0);
  {
    std::mt19937_64 rng(derive_seed(cfg.seed, tag("anchors")));
    for (std::size_t i = anchors.size() - 1; i > 0; --i) {
      std::swap(anchors[i], anchors[static_cast<std::size_t>(rng() % (i + 1))]);
    }
    anchors.resize(std::min(anchors.size(), static_cast<std::size_t>(cfg.n_test_points)));
  }

  MetricConfig elementwise = cfg.metric;
  elementwise.denom_mode = DenomMode::kElementwise;
  MetricConfig norm_ratio = cfg.metric;
  norm_ratio.denom_mode = DenomMode::kNormRatio;
  const std::vector<bool> binary = test.binary_mask();
  if (cfg.dump_neighborhoods) std::filesystem::create_directories(out_dir / "neighborhoods");

  std::vector<AnchorOutput> outputs(anchors.size());
  stage("explain", [&] {
    parallel_for(anchors.size(), cfg.workers, [&](std::size_t a) {
      const Eigen::Index row = anchors[a];
      const std::int64_t point_id = test.row_ids()[static_cast<std::size_t>(row)];
      const std::uint64_t anchor_seed = derive_seed(cfg.seed, tag("anchor"), a);
      const Vector x = test.row(row);
      AnchorOutput& out = outputs[a];
      Neighborhood nb;
      try {
        nb = sample_neighborhood(predictor, x, cfg.m_perturbations, binary, cfg.neighborhood,
                                 derive_seed(anchor_seed, tag("neighborhood")));
      } catch (const AcceptanceExhausted& e) {
        out.skipped = true;
        out.skip = SkippedAnchor{point_id, e.accepted_so_far(), e.attempts()};
        return;
      }
      if (cfg.dump_neighborhoods) {
        write_neighborhood_csv(out_dir / "neighborhoods" / ("point_" + std::to_string(point_id) + ".csv"), nb);
      }
      const Vector rep_x = predictor.representation(x);
      for (const ExplainerConfig& e : explainers) {
        const std::uint64_t method_seed = derive_seed(anchor_seed, tag(to_string(e.method)));
        const Vector e_x = explain(predictor, x, nb.anchor_label, e, derive_seed(method_seed, 0)).values;
        Matrix e_nb(nb.size(), x.size());
        for (Eigen::Index k = 0; k < nb.size(); ++k) {
          e_nb.row(k) = explain(predictor, nb.point(k), nb.anchor_label, e,
                                derive_seed(method_seed, static_cast<std::uint64_t>(k) + 1))
                            .values.transpose();
        }
        out.elementwise.push_back(score_point(point_id, e.method, e_x, e_nb, nb, predictor, elementwise));
        out.norm_ratio.push_back(score_point(point_id, e.method, e_x, e_nb, nb, predictor, norm_ratio));
        out.bounds.push_back(verify_bound(out.norm_ratio.back(), x, rep_x, lip, cfg.metric.p, cfg.bound_tol));
      }
    });
  });

  std::map<Label, int> class_mix;
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    AnchorOutput& out = outputs[a];
    if (out.skipped) {
      result.skipped.push_back(out.skip);
      continue;
    }
    result.anchor_ids.push_back(test.row_ids()[static_cast<std::size_t>(anchors[a])]);
    ++class_mix[test.y()[static_cast<std::size_t>(anchors[a])]];
    std::move(out.elementwise.begin(), out.elementwise.end(), std::back_inserter(result.elementwise));
    std::move(out.norm_ratio.begin(), out.norm_ratio.end(), std::back_inserter(result.norm_ratio));
    std::move(out.bounds.begin(), out.bounds.end(), std::back_inserter(result.bounds));
  }

  stage("write", [&] {
    auto write_records = [&](const std::string& stem, const std::vector<StabilityRecord>& recs) {
      std::string jsonl;
      std::string csv = stability_csv_header() + "\n";
      for (const auto& r : recs) {
        jsonl += stability_record_to_json(r, hash).dump() + "\n";
        csv += stability_csv_row(r, hash) + "\n";
      }
      write_text(out_dir / (stem + ".jsonl"), jsonl);
      write_text(out_dir / (stem + ".csv"), csv);
    };
    write_records("stability_elementwise", result.elementwise);
    write_records("stability_norm_ratio", result.norm_ratio);
    std::string jsonl;
    std::string csv = bound_csv_header() + "\n";
    for (const auto& b : result.bounds) {
      jsonl += bound_record_to_json(b).dump() + "\n";
      csv += bound_csv_row(b) + "\n";
    }
    write_text(out_dir / "bounds.jsonl", jsonl);
    write_text(out_dir / "bounds.csv", csv);
    save_model(out_dir / "model.json", result.model);
    write_text(out_dir / "config.json", config_to_json(cfg).dump(2) + "\n");

    Json skipped = Json::array();
    for (const auto& s : result.skipped) {
      skipped.push_back({{"point_id", s.point_id}, {"accepted", s.accepted}, {"attempts", s.attempts}});
    }
    Json mix = Json::object();
    for (const auto& [label, count] : class_mix) mix[std::to_string(label)] = count;
    Json methods = Json::array();
    for (const auto& e : explainers) methods.push_back(std::string(to_string(e.method)));
    int violations_ris = 0;
    int violations_rrs = 0;
    for (const auto& b : result.bounds) {
      violations_ris += b.violated_ris ? 1 : 0;
      violations_rrs += b.violated_rrs ? 1 : 0;
    }
    result.manifest = Json{
        {"version", kVersion},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION)},
        {"compiler", __VERSION__},
        {"config_hash", hash},
        {"seed", cfg.seed},
        {"methods", methods},
        {"anchors_requested", cfg.n_test_points},
        {"anchors_sampled", anchors.size()},
        {"anchors_scored", result.anchor_ids.size()},
        {"anchor_class_mix", mix},
        {"skipped_anchors", skipped},
        {"records_per_mode", result.norm_ratio.size()},
        {"model",
         {{"kind", std::string(to_string(result.model.kind))},
          {"best_val_accuracy", result.model.training.best_val_accuracy},
          {"best_epoch", result.model.training.best_epoch},
          {"test_accuracy", accuracy(result.model, test)}}},
        {"lipschitz", {{"p", std::string(to_string(cfg.metric.p))}, {"L1", lip.l1}, {"L2", lip.l2}}},
        {"bound_tol", cfg.bound_tol},
        {"bound_violations", {{"ris", violations_ris}, {"rrs", violations_rrs}}},
        {"files",
         {"stability_elementwise.jsonl", "stability_norm_ratio.jsonl", "bounds.jsonl",
          "stability_elementwise.csv", "stability_norm_ratio.csv", "bounds.csv", "model.json",
          "config.json"}},
        {"created_at", utc_timestamp()}};
    write_text(out_dir / "manifest.json", result.manifest.dump(2) + "\n");
  });
  return result;
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

LogStats log_stats(std::vector<double> values) {
  LogStats s;
  std::vector<double> logs;
  for (double v : values) {
    if (std::isnan(v)) continue;
    if (v == 0.0) ++s.zero_count;
    logs.push_back(std::log10(std::max(v, 1e-300)));
  }
  s.count = static_cast<int>(logs.size());
  std::sort(logs.begin(), logs.end());
  s.median = median_sorted(logs);
  s.q1 = quantile(logs, 0.25);
  s.q3 = quantile(logs, 0.75);
  s.min = logs.empty() ? std::numeric_limits<double>::quiet_NaN() : logs.front();
  s.max = logs.empty() ? std::numeric_limits<double>::quiet_NaN() : logs.back();
  return s;
}

Summary summarize_records(const std::vector<StabilityRecord>& records,
                          const std::vector<BoundRecord>& bounds,
                          const std::vector<Method>& methods, DenomMode mode) {
  Summary s;
  s.denom_mode = std::string(to_string(mode));
  s.methods = methods;
  std::map<Method, std::array<std::vector<double>, 4>> values;
  for (const auto& r : records) {
    if (r.denom_mode != mode) continue;
    auto& v = values[r.method];
    v[0].push_back(r.ris);
    v[1].push_back(r.rrs);
    v[2].push_back(r.ros);
    v[3].push_back(r.lipschitz);
  }
  const std::array<const char*, 4> names = {"RIS", "RRS", "ROS", "Lipschitz"};
  for (Method m : methods) {
    auto it = values.find(m);
    if (it == values.end()) continue;
    for (std::size_t k = 0; k < names.size(); ++k) s.cells[names[k]][m] = log_stats(it->second[k]);
  }
  auto rank = [&s, &methods](const char* metric) {
    std::vector<Method> order;
    for (Method m : methods) {
      if (s.cells[metric].count(m)) order.push_back(m);
    }
    std::stable_sort(order.begin(), order.end(), [&](Method a, Method b) {
      const double ma = s.cells[metric][a].median;
      const double mb = s.cells[metric][b].median;
      if (ma != mb) return ma < mb;
      return static_cast<int>(a) < static_cast<int>(b);
    });
    return order;
  };
  s.rank_rrs = rank("RRS");
  s.rank_ros = rank("ROS");
  s.tightness = tightness_summary(bounds);
  return s;
}

Summary summarize(const std::filesystem::path& results_dir, DenomMode mode) {
  const std::string stem = mode == DenomMode::kElementwise ? "stability_elementwise" : "stability_norm_ratio";
  std::vector<StabilityRecord> records;
  for (const auto& j : read_jsonl(results_dir / (stem + ".jsonl"))) {
    records.push_back(stability_record_from_json(j));
  }
  std::vector<BoundRecord> bounds;
  if (std::filesystem::exists(results_dir / "bounds.jsonl")) {
    for (const auto& j : read_jsonl(results_dir / "bounds.jsonl")) bounds.push_back(bound_record_from_json(j));
  }
  std::vector<Method> methods;
  if (std::filesystem::exists(results_dir / "manifest.json")) {
    const Json manifest = read_json(results_dir / "manifest.json");
    for (const auto& m : manifest.at("methods")) {
      methods.push_back(parse_method(m.get<std::string>()));
    }
  } else {
    std::set<Method> seen;
    for (const auto& r : records) seen.insert(r.method);
    methods.assign(seen.begin(), seen.end());
  }
  return summarize_records(records, bounds, methods, mode);
}

Json summary_to_json(const Summary& s) {
  Json cells = Json::object();
  for (const char* metric : {"RIS", "RRS", "ROS", "Lipschitz"}) {
    Json per_method = Json::object();
    const auto it = s.cells.find(metric);
    for (Method m : s.methods) {
      const std::string name(to_string(m));
      if (it == s.cells.end() || !it->second.count(m)) {
        per_method[name] = nullptr;  // absent
        continue;
      }
      const LogStats& c = it->second.at(m);
      per_method[name] = {{"count", c.count},
                          {"zero_count", c.zero_count},
                          {"log10_median", real_to_json(c.median)},
                          {"log10_q1", real_to_json(c.q1)},
                          {"log10_q3", real_to_json(c.q3)},
                          {"log10_min", real_to_json(c.min)},
                          {"log10_max", real_to_json(c.max)}};
    }
    cells[metric] = per_method;
  }
  auto names = [](const std::vector<Method>& v) {
    Json out = Json::array();
    for (Method m : v) out.push_back(std::string(to_string(m)));
    return out;
  };
  Json tight = Json::object();
  for (const auto& [m, row] : s.tightness) {
    auto slack_json = [](const SlackSummary& x) {
      return Json{{"count", x.count},
                  {"unbounded", x.unbounded},
                  {"geometric_mean", real_to_json(x.geometric_mean)},
                  {"log_mean", real_to_json(x.log_mean)},
                  {"median", real_to_json(x.median)}};
    };
    tight[std::string(to_string(m))] = {{"records", row.records},
                                        {"violations_ris", row.violations_ris},
                                        {"violations_rrs", row.violations_rrs},
                                        {"violations_ris_sound", row.violations_ris_sound},
                                        {"slack_ris", slack_json(row.ris)},
                                        {"slack_rrs", slack_json(row.rrs)}};
  }
  return Json{{"denom_mode", s.denom_mode},
              {"cells", cells},
              {"rank_by_median_rrs", names(s.rank_rrs)},
              {"rank_by_median_ros", names(s.rank_ros)},
              {"bound_tightness", tight}};
}

std::string format_summary(const Summary& s) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  out << "Stability summary (" << s.denom_mode << " mode), log10 values\n";
  for (const char* metric : {"RIS", "RRS", "ROS", "Lipschitz"}) {
    out << "\n" << metric << "\n";
    out << std::left << std::setw(22) << "  method" << std::right << std::setw(6) << "n"
        << std::setw(7) << "zeros" << std::setw(10) << "min" << std::setw(10) << "q1"
        << std::setw(10) << "median" << std::setw(10) << "q3" << std::setw(10) << "max" << "\n";
    const auto it = s.cells.find(metric);
    for (Method m : s.methods) {
      out << std::left << std::setw(22) << ("  " + std::string(to_string(m))) << std::right;
      if (it == s.cells.end() || !it->second.count(m)) {
        out << std::setw(6) << "-" << "  (absent)\n";
        continue;
      }
      const LogStats& c = it->second.at(m);
      out << std::setw(6) << c.count << std::setw(7) << c.zero_count << std::setw(10) << c.min
          << std::setw(10) << c.q1 << std::setw(10) << c.median << std::setw(10) << c.q3
          << std::setw(10) << c.max << "\n";
    }
  }
  auto print_rank = [&out](const char* title, const std::vector<Method>& order) {
    out << "\nRanking by median " << title << " (most stable first):";
    for (std::size_t i = 0; i < order.size(); ++i) out << (i ? ", " : " ") << to_string(order[i]);
    out << "\n";
  };
  print_rank("RRS", s.rank_rrs);
  print_rank("ROS", s.rank_ros);

  // Trend checks, reported for manual comparison.
  const auto cell = [&s](const char* metric, Method m) -> const LogStats* {
    const auto it = s.cells.find(metric);
    if (it == s.cells.end()) return nullptr;
    const auto jt = it->second.find(m);
    return jt == it->second.end() ? nullptr : &jt->second;
  };
  out << "\nMedian RIS below median RRS and ROS:\n";
  for (Method m : s.methods) {
    const LogStats* ris = cell("RIS", m);
    const LogStats* rrs = cell("RRS", m);
    const LogStats* ros = cell("ROS", m);
    if (!ris || !rrs || !ros) continue;
    const bool below = ris->median < rrs->median && ris->median < ros->median;
    out << "  " << std::left << std::setw(20) << to_string(m) << std::right << (below ? "yes" : "no")
        << "\n";
  }
  for (const char* metric : {"RRS", "ROS"}) {
    std::vector<std::pair<double, Method>> grad;
    for (Method m : s.methods) {
      if (const LogStats* c = cell(metric, m); c && is_gradient_method(m)) grad.emplace_back(c->median, m);
    }
    std::sort(grad.begin(), grad.end());
    if (grad.empty()) continue;
    out << "Most stable gradient method by median " << metric << ": " << to_string(grad.front().second);
    const auto sg = std::find_if(grad.begin(), grad.end(),
                                 [](const auto& g) { return g.second == Method::kSmoothGrad; });
    if (sg != grad.end()) {
      const auto rank_pos = static_cast<int>(sg - grad.begin()) + 1;
      out << "; SmoothGrad ranks " << rank_pos << " of " << grad.size();
      if (rank_pos == 1 && grad.size() > 1) {
        const double margin = 1.0 - std::pow(10.0, grad[0].first - grad[1].first);
        out << ", " << std::setprecision(1) << 100.0 * margin << std::setprecision(3)
            << "% below the runner-up";
      }
    }
    out << "\n";
  }
  out << "Published reference: SmoothGrad \"outperforms other methods by 12.7%\" on RRS/ROS.\n";

  if (!s.tightness.empty()) {
    out << "\nBound tightness (slack = bound / empirical)\n";
    out << std::left << std::setw(22) << "  method" << std::right << std::setw(8) << "records"
        << std::setw(10) << "viol_ris" << std::setw(10) << "viol_rrs" << std::setw(14)
        << "gmean_ris" << std::setw(14) << "gmean_rrs" << "\n";
    double log_sum = 0.0;
    int log_count = 0;
    for (const auto& [m, row] : s.tightness) {
      out << std::left << std::setw(22) << ("  " + std::string(to_string(m))) << std::right
          << std::setw(8) << row.records << std::setw(10) << row.violations_ris << std::setw(10)
          << row.violations_rrs << std::setw(14) << row.ris.geometric_mean << std::setw(14)
          << row.rrs.geometric_mean << "\n";
      if (row.ris.count > 0) {
        log_sum += row.ris.log_mean * row.ris.count;
        log_count += row.ris.count;
      }
    }
    if (log_count > 0) {
      out << "Overall RIS bound is " << std::setprecision(1)
          << 100.0 * (std::exp(log_sum / log_count) - 1.0)
          << "% above the empirical value (geometric mean); published reference: 233%.\n";
    }
  }
  return out.str();
}

BoundCheck check_bounds(const std::filesystem::path& results_dir, double tol) {
  BoundCheck check;
  std::map<std::pair<std::int64_t, Method>, StabilityRecord> metrics;
  const auto stability_file = results_dir / "stability_norm_ratio.jsonl";
  if (std::filesystem::exists(stability_file)) {
    for (const auto& j : read_jsonl(stability_file)) {
      StabilityRecord r = stability_record_from_json(j);
      metrics.emplace(std::make_pair(r.point_id, r.method), std::move(r));
    }
  }
  for (const auto& j : read_jsonl(results_dir / "bounds.jsonl")) {
    const BoundRecord b = bound_record_from_json(j);
    ++check.records;
    check.violations_ris += bound_violated(b.ris, b.lambda1 * b.l1 * b.rrs, tol) ? 1 : 0;
    check.violations_rrs += bound_violated(b.rrs, b.lambda2 * b.l2 * b.ros, tol) ? 1 : 0;
    check.violations_ris_sound += bound_violated(b.ris, b.lambda1_sound * b.l1 * b.rrs, tol) ? 1 : 0;
    if (!metrics.empty()) {
      const auto it = metrics.find({b.point_id, b.method});
      if (it == metrics.end() || it->second.ris != b.ris || it->second.rrs != b.rrs ||
          it->second.ros != b.ros) {
        ++check.mismatched;
      }
    }
  }
  return check;
}

CirclesReport circles_report(const CirclesReportConfig& cfg) {
  ExperimentConfig exp;
  exp.dataset = cfg.dataset;
  exp.model = cfg.model;
  exp.hidden_width = cfg.hidden_width;
  exp.training = cfg.training;
  exp.seed = cfg.seed;
  const PreparedData data = stage("data", [&] { return prepare_data(exp); });
  const ModelArtifact model = stage("train", [&] { return train_model(exp, data); });
  const ModelPredictor predictor(model);

  CirclesReport report;
  report.val_accuracy = accuracy(model, data.splits.val);
  report.training_ok = report.val_accuracy >= cfg.min_val_accuracy;
  std::filesystem::create_directories(cfg.output_dir);
  if (!report.training_ok) {
    throw StageError("train", "validation accuracy " + std::to_string(report.val_accuracy) +
                                  " is below the required " + std::to_string(cfg.min_val_accuracy));
  }

  // Per-class centroid of the first-layer embedding over the training split.
  const Dataset& train_set = data.splits.train;
  const int classes = model.num_classes();
  const Eigen::Index width = model.w1.rows();
  report.centroids.assign(static_cast<std::size_t>(classes), Vector::Zero(width));
  std::vector<int> counts(static_cast<std::size_t>(classes), 0);
  for (Eigen::Index i = 0; i < train_set.size(); ++i) {
    const auto c = static_cast<std::size_t>(train_set.y()[static_cast<std::size_t>(i)]);
    report.centroids[c] += representation(model, train_set.row(i));
    ++counts[c];
  }
  for (std::size_t c = 0; c < report.centroids.size(); ++c) {
    if (counts[c] > 0) report.centroids[c] /= counts[c];
  }
  // Index of the centroid nearest to `rep` other than `own`, and whether it
  // beats the own-class centroid.
  const auto nearer_other = [&report](const Vector& rep, Label own) {
    const double own_dist = (rep - report.centroids[static_cast<std::size_t>(own)]).norm();
    for (std::size_t c = 0; c < report.centroids.size(); ++c) {
      if (static_cast<Label>(c) != own && (rep - report.centroids[c]).norm() < own_dist) return true;
    }
    return false;
  };

  const Dataset& test = data.splits.test;
  std::vector<Eigen::Index> anchors(static_cast<std::size_t>(test.size()));
  std::iota(anchors.begin(), anchors.end(), 0);
  std::mt19937_64 rng(derive_seed(cfg.seed, tag("circles-anchors")));
  for (std::size_t i = anchors.size() - 1; i > 0; --i) {
    std::swap(anchors[i], anchors[static_cast<std::size_t>(rng() % (i + 1))]);
  }
  anchors.resize(std::min(anchors.size(), static_cast<std::size_t>(cfg.n_anchors)));

  std::ostringstream embeddings;
  embeddings << std::setprecision(17);
  embeddings << "anchor,role,x0,x1,predicted";
  for (int c = 0; c < classes; ++c) embeddings << ",dist_centroid_" << c;
  embeddings << ",nearer_other\n";
  auto emit = [&](std::size_t a, const char* role, const Vector& x, Label label, bool other) {
    const Vector rep = representation(model, x);
    embeddings << a << ',' << role << ',' << x[0] << ',' << (x.size() > 1 ? x[1] : 0.0) << ',' << label;
    for (const auto& centroid : report.centroids) embeddings << ',' << (rep - centroid).norm();
    embeddings << ',' << (other ? 1 : 0) << '\n';
  };

  int anchors_other = 0;
  const std::vector<bool> binary = test.binary_mask();
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const Vector x = test.row(anchors[a]);
    Neighborhood nb;
    try {
      nb = sample_neighborhood(predictor, x, cfg.m_perturbations, binary, cfg.neighborhood,
                               derive_seed(cfg.seed, tag("circles-nb"), a));
    } catch (const AcceptanceExhausted&) {
      continue;
    }
    ++report.n_anchors;
    const bool anchor_other = nearer_other(representation(model, x), nb.anchor_label);
    anchors_other += anchor_other ? 1 : 0;
    emit(a, "anchor", x, nb.anchor_label, anchor_other);
    for (Eigen::Index k = 0; k < nb.size(); ++k) {
      const Vector z = nb.point(k);
      const bool other = nearer_other(representation(model, z), nb.anchor_label);
      report.opposite_count += other ? 1 : 0;
      ++report.n_perturbations;
      emit(a, "perturbation", z, nb.anchor_label, other);
    }
  }
  if (report.n_perturbations > 0) {
    report.opposite_fraction =
        static_cast<double>(report.opposite_count) / static_cast<double>(report.n_perturbations);
  }
  if (report.n_anchors > 0) {
    report.anchor_opposite_fraction =
        static_cast<double>(anchors_other) / static_cast<double>(report.n_anchors);
  }

  // Confidence raster over the bounding box of the standardized data.
  std::ostringstream heatmap;
  heatmap << std::setprecision(17) << "x0,x1,p_positive\n";
  if (train_set.dim() == 2 && cfg.grid_resolution >= 2) {
    const Vector lo = train_set.x().colwise().minCoeff().transpose().array() - 0.5;
    const Vector hi = train_set.x().colwise().maxCoeff().transpose().array() + 0.5;
    const int g = cfg.grid_resolution;
    for (int i = 0; i < g; ++i) {
      for (int j = 0; j < g; ++j) {
        Vector x(2);
        x[0] = lo[0] + (hi[0] - lo[0]) * i / (g - 1);
        x[1] = lo[1] + (hi[1] - lo[1]) * j / (g - 1);
        heatmap << x[0] << ',' << x[1] << ',' << predictor.forward(x).probs[classes - 1] << '\n';
      }
    }
  }
  write_text(cfg.output_dir / "embeddings.csv", embeddings.str());
  write_text(cfg.output_dir / "heatmap.csv", heatmap.str());
  Json centroids = Json::array();
  for (const auto& c : report.centroids) centroids.push_back(vector_to_json(c));
  const Json j{{"model", std::string(to_string(model.kind))},
               {"dataset", dataset_to_json(cfg.dataset)},
               {"seed", cfg.seed},
               {"val_accuracy", report.val_accuracy},
               {"n_anchors", report.n_anchors},
               {"n_perturbations", report.n_perturbations},
               {"opposite_count", report.opposite_count},
               {"opposite_fraction", report.opposite_fraction},
               {"anchor_opposite_fraction", report.anchor_opposite_fraction},
               {"centroids", centroids}};
  write_text(cfg.output_dir / "report.json", j.dump(2) + "\n");
  save_model(cfg.output_dir / "model.json", model);
  return report;
}

}  // namespace relstab
