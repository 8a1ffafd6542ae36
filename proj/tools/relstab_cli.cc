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

// Command-line front end: train, run, verify-bounds, summarize, circles.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "relstab/harness.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitViolation = 3;
constexpr int kExitStage = 4;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string model;
  std::string p;
  std::optional<int> workers;
};

relstab::ExperimentConfig build_config(const Overrides& o) {
  relstab::ExperimentConfig cfg;
  if (!o.config.empty()) cfg = relstab::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (!o.model.empty()) cfg.model = relstab::parse_model_kind(o.model);
  if (!o.p.empty()) cfg.metric.p = relstab::parse_norm_order(o.p);
  if (o.workers) cfg.workers = *o.workers;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)");
  cmd->add_option("--seed", o.seed, "global seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--model", o.model, "model kind")->check(CLI::IsMember({"lr", "mlp"}));
  cmd->add_option("--p", o.p, "norm order")->check(CLI::IsMember({"1", "2", "inf"}));
}

int cmd_train(const Overrides& o) {
  const relstab::ExperimentConfig cfg = build_config(o);
  std::filesystem::create_directories(cfg.output_dir);
  const relstab::PreparedData data = relstab::prepare_data(cfg);
  const relstab::ModelArtifact model = relstab::train_model(cfg, data);
  relstab::save_model(cfg.output_dir / "model.json", model);
  std::printf("trained %s: best validation accuracy %.4f at epoch %d, test accuracy %.4f\n",
              std::string(relstab::to_string(model.kind)).c_str(), model.training.best_val_accuracy,
              model.training.best_epoch, relstab::accuracy(model, data.splits.test));
  std::printf("wrote %s\n", (cfg.output_dir / "model.json").string().c_str());
  return kExitOk;
}

int cmd_run(const Overrides& o) {
  const relstab::ExperimentConfig cfg = build_config(o);
  const relstab::RunResult r = relstab::run_experiment(cfg);
  std::printf("scored %zu anchors (%zu skipped), %zu records per mode\n", r.anchor_ids.size(),
              r.skipped.size(), r.norm_ratio.size());
  std::printf("bound violations: RIS %d, RRS %d\n",
              r.manifest["bound_violations"]["ris"].get<int>(),
              r.manifest["bound_violations"]["rrs"].get<int>());
  std::printf("results in %s\n", cfg.output_dir.string().c_str());
  return kExitOk;
}

int cmd_verify(const std::string& dir, double tol) {
  const relstab::BoundCheck c = relstab::check_bounds(dir, tol);
  std::printf("records %d\nviolations RIS %d\nviolations RRS %d\nviolations RIS (sound factor) %d\n"
              "mismatched rows %d\n",
              c.records, c.violations_ris, c.violations_rrs, c.violations_ris_sound, c.mismatched);
  return c.violations_ris + c.violations_rrs + c.mismatched > 0 ? kExitViolation : kExitOk;
}

int cmd_summarize(const std::string& dir, const std::string& mode, bool json) {
  const relstab::Summary s = relstab::summarize(dir, relstab::parse_denom_mode(mode));
  if (json) {
    std::cout << relstab::summary_to_json(s).dump(2) << "\n";
  } else {
    std::cout << relstab::format_summary(s);
  }
  return kExitOk;
}

int cmd_circles(const Overrides& o, bool blobs, int anchors, int m) {
  relstab::CirclesReportConfig cfg;
  if (!o.config.empty()) {
    const relstab::ExperimentConfig base = relstab::load_config(o.config);
    cfg.dataset = base.dataset;
    cfg.model = base.model;
    cfg.hidden_width = base.hidden_width;
    cfg.training = base.training;
    cfg.seed = base.seed;
    cfg.neighborhood = base.neighborhood;
  }
  if (blobs) {
    cfg.dataset.kind = relstab::DatasetSource::Kind::kBlobs;
    cfg.model = relstab::ModelKind::kLogistic;
  }
  if (o.seed) cfg.seed = *o.seed;
  if (!o.model.empty()) cfg.model = relstab::parse_model_kind(o.model);
  cfg.output_dir = o.out.empty() ? std::filesystem::path("circles") : std::filesystem::path(o.out);
  cfg.n_anchors = anchors;
  cfg.m_perturbations = m;
  const relstab::CirclesReport r = relstab::circles_report(cfg);
  std::printf("validation accuracy %.4f\n", r.val_accuracy);
  std::printf("perturbations nearer the opposite-class centroid: %d of %d (%.4f)\n", r.opposite_count,
              r.n_perturbations, r.opposite_fraction);
  std::printf("anchors nearer the opposite-class centroid: %.4f\n", r.anchor_opposite_fraction);
  std::printf("report in %s\n", cfg.output_dir.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative stability of feature attributions"};
  app.require_subcommand(1);

  Overrides train_o;
  auto* train = app.add_subcommand("train", "train and save a model");
  add_common(train, train_o);

  Overrides run_o;
  auto* run = app.add_subcommand("run", "full pipeline: train, explain, score, verify");
  add_common(run, run_o);
  run->add_option("--workers", run_o.workers, "worker threads");

  std::string verify_dir = "results";
  double verify_tol = 1e-9;
  auto* verify = app.add_subcommand("verify-bounds", "re-check persisted bound records");
  verify->add_option("--out", verify_dir, "results directory");
  verify->add_option("--tol", verify_tol, "relative and absolute tolerance");

  std::string summary_dir = "results";
  std::string summary_mode = "norm-ratio";
  bool summary_json = false;
  auto* summary = app.add_subcommand("summarize", "log-scale summary tables");
  summary->add_option("--out", summary_dir, "results directory");
  summary->add_option("--denom-mode", summary_mode, "denominator mode")
      ->check(CLI::IsMember({"elementwise", "norm-ratio", "norm_ratio"}));
  summary->add_flag("--json", summary_json, "print JSON instead of a table");

  Overrides circles_o;
  bool circles_blobs = false;
  int circles_anchors = 50;
  int circles_m = 50;
  auto* circles = app.add_subcommand("circles", "embedding centroid analysis on circles");
  add_common(circles, circles_o);
  circles->add_flag("--blobs", circles_blobs, "linear model on separable blobs instead");
  circles->add_option("--anchors", circles_anchors, "number of anchors");
  circles->add_option("--m", circles_m, "perturbations per anchor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) return cmd_train(train_o);
    if (*run) return cmd_run(run_o);
    if (*verify) return cmd_verify(verify_dir, verify_tol);
    if (*summary) return cmd_summarize(summary_dir, summary_mode, summary_json);
    if (*circles) return cmd_circles(circles_o, circles_blobs, circles_anchors, circles_m);
  } catch (const relstab::StageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitStage;
  } catch (const relstab::InvalidInput& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitStage;
  }
  return kExitOk;
}
