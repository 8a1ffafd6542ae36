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

#include "relstab/serialize.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace relstab {
namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.size(); ++i) data.push_back(real_to_json(m.data()[i]));
  return data;
}

Matrix matrix_from_json(const Json& data, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw InvalidInput(std::string("model field '") + name + "' does not match its declared shape");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = real_from_json(data[static_cast<std::size_t>(i)], std::nan(""));
  }
  return m;
}

Json shape(Eigen::Index rows, Eigen::Index cols) { return Json::array({rows, cols}); }

std::pair<Eigen::Index, Eigen::Index> read_shape(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("model shape must be [rows, cols]");
  return {j[0].get<Eigen::Index>(), j[1].get<Eigen::Index>()};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

Json real_to_json(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

double real_from_json(const Json& j, double null_value) {
  if (j.is_null()) return null_value;
  return j.get<double>();
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(real_to_json(v[i]));
  return out;
}

Vector vector_from_json(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = real_from_json(j[i], std::nan(""));
  }
  return v;
}

Json model_to_json(const ModelArtifact& model) {
  Json j;
  j["kind"] = std::string(to_string(model.kind));
  j["hidden_width"] = model.hidden_width;
  j["seed"] = model.seed;
  j["shapes"] = {{"W1", shape(model.w1.rows(), model.w1.cols())},
                 {"b1", model.b1.size()},
                 {"W2", shape(model.w2.rows(), model.w2.cols())},
                 {"b2", model.b2.size()}};
  j["W1"] = matrix_to_json(model.w1);
  j["b1"] = vector_to_json(model.b1);
  j["W2"] = matrix_to_json(model.w2);
  j["b2"] = vector_to_json(model.b2);
  j["training_meta"] = {{"epochs_run", model.training.epochs_run},
                        {"best_val_accuracy", real_to_json(model.training.best_val_accuracy)},
                        {"best_epoch", model.training.best_epoch}};
  return j;
}

ModelArtifact model_from_json(const Json& j) {
  try {
    ModelArtifact m;
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    m.hidden_width = j.value("hidden_width", 0);
    m.seed = j.value("seed", std::uint64_t{0});
    const Json& shapes = j.at("shapes");
    const auto [r1, c1] = read_shape(shapes.at("W1"));
    const auto [r2, c2] = read_shape(shapes.at("W2"));
    m.w1 = matrix_from_json(j.at("W1"), r1, c1, "W1");
    m.w2 = matrix_from_json(j.at("W2"), r2, c2, "W2");
    const auto nb1 = shapes.at("b1").get<Eigen::Index>();
    const auto nb2 = shapes.at("b2").get<Eigen::Index>();
    m.b1 = matrix_from_json(j.at("b1"), nb1, 1, "b1").col(0);
    m.b2 = matrix_from_json(j.at("b2"), nb2, 1, "b2").col(0);
    if (j.contains("training_meta")) {
      const Json& t = j["training_meta"];
      m.training.epochs_run = t.value("epochs_run", 0);
      m.training.best_val_accuracy = real_from_json(t.value("best_val_accuracy", Json(nullptr)), 0.0);
      m.training.best_epoch = t.value("best_epoch", -1);
    }
    m.validate();
    return m;
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed model JSON: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const ModelArtifact& model) {
  write_text(path, model_to_json(model).dump(1) + "\n");
}

ModelArtifact load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

Json hyper_to_json(const ExplainerConfig& cfg) {
  Json h = Json::object();
  switch (cfg.method) {
    case Method::kSmoothGrad:
      h["n_samples"] = cfg.smoothgrad_samples;
      h["std"] = cfg.smoothgrad_std;
      break;
    case Method::kIntegratedGradients:
      h["steps"] = cfg.ig_steps;
      break;
    case Method::kLime:
      h["n_samples"] = cfg.lime_samples;
      h["kernel_width"] = cfg.lime_kernel_width;
      h["std"] = cfg.lime_std;
      h["ridge"] = cfg.lime_ridge;
      break;
    case Method::kKernelShap:
      h["n_samples"] = cfg.shap_samples;
      break;
    default:
      break;
  }
  if ((cfg.method == Method::kIntegratedGradients || cfg.method == Method::kKernelShap) &&
      cfg.baseline.size() > 0) {
    h["baseline"] = vector_to_json(cfg.baseline);
  }
  return h;
}

Json explainer_to_json(const ExplainerConfig& cfg) {
  Json j = hyper_to_json(cfg);
  j.erase("baseline");
  Json out = {{"method", std::string(to_string(cfg.method))}};
  out.update(j);
  return out;
}

ExplainerConfig explainer_from_json(const Json& j) {
  ExplainerConfig cfg;
  cfg.method = parse_method(j.at("method").get<std::string>());
  switch (cfg.method) {
    case Method::kSmoothGrad:
      cfg.smoothgrad_samples = j.value("n_samples", cfg.smoothgrad_samples);
      cfg.smoothgrad_std = j.value("std", cfg.smoothgrad_std);
      break;
    case Method::kIntegratedGradients:
      cfg.ig_steps = j.value("steps", cfg.ig_steps);
      break;
    case Method::kLime:
      cfg.lime_samples = j.value("n_samples", cfg.lime_samples);
      cfg.lime_kernel_width = j.value("kernel_width", cfg.lime_kernel_width);
      cfg.lime_std = j.value("std", cfg.lime_std);
      cfg.lime_ridge = j.value("ridge", cfg.lime_ridge);
      break;
    case Method::kKernelShap:
      cfg.shap_samples = j.value("n_samples", cfg.shap_samples);
      break;
    default:
      break;
  }
  return cfg;
}

Json attribution_to_json(const Attribution& a) {
  return Json{{"method", std::string(to_string(a.method))},
              {"target", a.target},
              {"seed", a.seed},
              {"hyper", hyper_to_json(a.config)},
              {"values", vector_to_json(a.values)}};
}

Json metric_config_to_json(const MetricConfig& cfg) {
  return Json{{"p", std::string(to_string(cfg.p))},
              {"eps_min", cfg.eps_min},
              {"eps_div", cfg.eps_div},
              {"denom_mode", std::string(to_string(cfg.denom_mode))}};
}

MetricConfig metric_config_from_json(const Json& j) {
  MetricConfig cfg;
  if (j.contains("p")) {
    cfg.p = j["p"].is_string() ? parse_norm_order(j["p"].get<std::string>())
                               : parse_norm_order(std::to_string(j["p"].get<int>()));
  }
  cfg.eps_min = j.value("eps_min", cfg.eps_min);
  cfg.eps_div = j.value("eps_div", cfg.eps_div);
  if (j.contains("denom_mode")) cfg.denom_mode = parse_denom_mode(j["denom_mode"].get<std::string>());
  cfg.validate();
  return cfg;
}

Json stability_record_to_json(const StabilityRecord& r, const std::string& config_hash,
                              bool per_neighbor) {
  Json j{{"point_id", r.point_id},
         {"method", std::string(to_string(r.method))},
         {"denom_mode", std::string(to_string(r.denom_mode))},
         {"ris", real_to_json(r.ris)},
         {"rrs", real_to_json(r.rrs)},
         {"ros", real_to_json(r.ros)},
         {"lipschitz", real_to_json(r.lipschitz)},
         {"argmax_ris", r.argmax_ris},
         {"argmax_rrs", r.argmax_rrs},
         {"argmax_ros", r.argmax_ros},
         {"skipped_ris", r.skipped_ris},
         {"skipped_rrs", r.skipped_rrs},
         {"skipped_ros", r.skipped_ros},
         {"config_hash", config_hash}};
  if (per_neighbor) {
    j["per_neighbor_ris"] = vector_to_json(r.per_neighbor_ris);
    j["per_neighbor_rrs"] = vector_to_json(r.per_neighbor_rrs);
    j["per_neighbor_ros"] = vector_to_json(r.per_neighbor_ros);
  }
  return j;
}

StabilityRecord stability_record_from_json(const Json& j) {
  StabilityRecord r;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.point_id = j.at("point_id").get<std::int64_t>();
  r.method = parse_method(j.at("method").get<std::string>());
  r.denom_mode = parse_denom_mode(j.at("denom_mode").get<std::string>());
  r.ris = real_from_json(j.at("ris"), nan);
  r.rrs = real_from_json(j.at("rrs"), nan);
  r.ros = real_from_json(j.at("ros"), nan);
  r.lipschitz = real_from_json(j.at("lipschitz"), nan);
  r.argmax_ris = j.value("argmax_ris", Eigen::Index{-1});
  r.argmax_rrs = j.value("argmax_rrs", Eigen::Index{-1});
  r.argmax_ros = j.value("argmax_ros", Eigen::Index{-1});
  r.skipped_ris = j.value("skipped_ris", 0);
  r.skipped_rrs = j.value("skipped_rrs", 0);
  r.skipped_ros = j.value("skipped_ros", 0);
  if (j.contains("per_neighbor_ris")) r.per_neighbor_ris = vector_from_json(j["per_neighbor_ris"]);
  if (j.contains("per_neighbor_rrs")) r.per_neighbor_rrs = vector_from_json(j["per_neighbor_rrs"]);
  if (j.contains("per_neighbor_ros")) r.per_neighbor_ros = vector_from_json(j["per_neighbor_ros"]);
  return r;
}

Json bound_record_to_json(const BoundRecord& b) {
  return Json{{"point_id", b.point_id},
              {"method", std::string(to_string(b.method))},
              {"L1", real_to_json(b.l1)},
              {"L2", real_to_json(b.l2)},
              {"lambda1", real_to_json(b.lambda1)},
              {"lambda2", real_to_json(b.lambda2)},
              {"lambda1_sound", real_to_json(b.lambda1_sound)},
              {"ris", real_to_json(b.ris)},
              {"rrs", real_to_json(b.rrs)},
              {"ros", real_to_json(b.ros)},
              {"bound_ris", real_to_json(b.bound_ris)},
              {"bound_rrs", real_to_json(b.bound_rrs)},
              {"bound_ris_sound", real_to_json(b.bound_ris_sound)},
              {"bound_composite", real_to_json(b.bound_composite)},
              {"slack_ris", real_to_json(b.slack_ris)},
              {"slack_rrs", real_to_json(b.slack_rrs)},
              {"violated_ris", b.violated_ris},
              {"violated_rrs", b.violated_rrs},
              {"violated_ris_sound", b.violated_ris_sound}};
}

BoundRecord bound_record_from_json(const Json& j) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  BoundRecord b;
  b.point_id = j.at("point_id").get<std::int64_t>();
  b.method = parse_method(j.at("method").get<std::string>());
  b.l1 = real_from_json(j.at("L1"), nan);
  b.l2 = real_from_json(j.at("L2"), nan);
  b.lambda1 = real_from_json(j.at("lambda1"), nan);
  b.lambda2 = real_from_json(j.at("lambda2"), nan);
  b.lambda1_sound = real_from_json(j.at("lambda1_sound"), nan);
  b.ris = real_from_json(j.at("ris"), nan);
  b.rrs = real_from_json(j.at("rrs"), nan);
  b.ros = real_from_json(j.at("ros"), nan);
  b.bound_ris = real_from_json(j.at("bound_ris"), nan);
  b.bound_rrs = real_from_json(j.at("bound_rrs"), nan);
  b.bound_ris_sound = real_from_json(j.at("bound_ris_sound"), nan);
  b.bound_composite = real_from_json(j.at("bound_composite"), nan);
  b.slack_ris = real_from_json(j.at("slack_ris"), inf);
  b.slack_rrs = real_from_json(j.at("slack_rrs"), inf);
  b.violated_ris = j.at("violated_ris").get<bool>();
  b.violated_rrs = j.at("violated_rrs").get<bool>();
  b.violated_ris_sound = j.value("violated_ris_sound", false);
  return b;
}

std::string stability_csv_header() {
  return "point_id,method,denom_mode,ris,rrs,ros,lipschitz,argmax_ris,argmax_rrs,argmax_ros,"
         "skipped_ris,skipped_rrs,skipped_ros,config_hash";
}

std::string stability_csv_row(const StabilityRecord& r, const std::string& config_hash) {
  std::ostringstream out;
  out << r.point_id << ',' << to_string(r.method) << ',' << to_string(r.denom_mode) << ','
      << fmt_real(r.ris) << ',' << fmt_real(r.rrs) << ',' << fmt_real(r.ros) << ','
      << fmt_real(r.lipschitz) << ',' << r.argmax_ris << ',' << r.argmax_rrs << ','
      << r.argmax_ros << ',' << r.skipped_ris << ',' << r.skipped_rrs << ',' << r.skipped_ros
      << ',' << config_hash;
  return out.str();
}

std::string bound_csv_header() {
  return "point_id,method,L1,L2,lambda1,lambda2,lambda1_sound,ris,rrs,ros,bound_ris,bound_rrs,"
         "bound_ris_sound,bound_composite,slack_ris,slack_rrs,violated_ris,violated_rrs,"
         "violated_ris_sound";
}

std::string bound_csv_row(const BoundRecord& b) {
  std::ostringstream out;
  out << b.point_id << ',' << to_string(b.method);
  for (double v : {b.l1, b.l2, b.lambda1, b.lambda2, b.lambda1_sound, b.ris, b.rrs, b.ros,
                   b.bound_ris, b.bound_rrs, b.bound_ris_sound, b.bound_composite, b.slack_ris,
                   b.slack_rrs}) {
    out << ',' << fmt_real(v);
  }
  out << ',' << (b.violated_ris ? 1 : 0) << ',' << (b.violated_rrs ? 1 : 0) << ','
      << (b.violated_ris_sound ? 1 : 0);
  return out.str();
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<Json> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw InvalidInput(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

Json read_json(const std::filesystem::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace relstab
