/*
 * Copyright 2026 The Insight Authors.
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

#pragma once

// Subcommand implementations shared by the insight executable and the tests.

#include <array>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "insight/cli/run_config.hpp"
#include "insight/data/dataset_io.hpp"
#include "insight/data/heatmap_export.hpp"
#include "insight/eval/evaluate.hpp"
#include "insight/eval/report.hpp"
#include "insight/model/checkpoint.hpp"
#include "insight/train/grid.hpp"
#include "insight/train/trainer.hpp"

namespace insight {

namespace fs = std::filesystem;

inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kCheckpointFile = "checkpoint.insm";
inline constexpr const char* kHistoryFile = "history.jsonl";
inline constexpr const char* kReportJsonFile = "report.json";
inline constexpr const char* kReportCsvFile = "report.csv";

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitNumerical = 4 };

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ArgumentError*>(&e)) return kExitUsage;
  if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const OracleError*>(&e)) return kExitNumerical;
  return kExitData;
}

namespace detail {

inline void write_resolved_config(const fs::path& dir, const RunConfig& cfg) {
  write_file_atomic(dir / kConfigFile, dump_run_config(cfg));
}

inline void check_dataset_labels(const LoadedDataset& ds, const ModelConfig& model) {
  if (ds.num_labels != model.num_labels) {
    throw ConfigError("dataset has " + std::to_string(ds.num_labels) + " labels but model.num_labels = " +
                      std::to_string(model.num_labels));
  }
}

inline std::string format_metric(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------- synth

inline Dataset cmd_synth(const RunConfig& cfg, const fs::path& out_dir, bool force = false) {
  cfg.synth.validate();
  if (fs::exists(out_dir)) {
    if (!fs::is_directory(out_dir)) throw ArgumentError(out_dir.string() + " exists and is not a directory");
    if (!fs::is_empty(out_dir)) {
      if (!force) throw ArgumentError(out_dir.string() + " is not empty (use --force to overwrite)");
      fs::remove_all(out_dir);
    }
  }
  fs::create_directories(out_dir);
  Dataset ds = generate_synthetic(cfg.synth);
  write_dataset(out_dir, ds, cfg.synth);
  detail::write_resolved_config(out_dir, cfg);
  return ds;
}

// ---------------------------------------------------------------- train

inline TrainResult<float> train_on(const RunConfig& cfg, const LoadedDataset& ds, const TrainOptions& options = {}) {
  detail::check_dataset_labels(ds, cfg.model);
  return train(init_params<float>(cfg.model, cfg.train.seed), cfg.model, ds.split("train"), ds.split("val"), cfg.train,
               cfg.effective_loss(), options);
}

inline TrainResult<float> cmd_train(const RunConfig& cfg, const fs::path& dataset_dir, const fs::path& out_dir,
                                    std::function<void(const EpochRecord&)> on_epoch = {}) {
  cfg.validate();
  const LoadedDataset ds = read_dataset(dataset_dir);
  fs::create_directories(out_dir);
  detail::write_resolved_config(out_dir, cfg);
  TrainOptions options;
  options.jobs = cfg.jobs;
  options.on_epoch = std::move(on_epoch);
  auto result = train_on(cfg, ds, options);
  write_checkpoint(out_dir / kCheckpointFile, cfg.model, result.best);
  write_file_atomic(out_dir / kHistoryFile, history_to_jsonl(result.history));
  return result;
}

inline std::string leaderboard_csv(const GridResult& g) {
  std::ostringstream os;
  os.precision(17);
  os << "rank,alpha,learning_rate,lambda_sd,metric,best_epoch,epochs_run\n";
  for (std::size_t i = 0; i < g.leaderboard.size(); ++i) {
    const auto& p = g.leaderboard[i];
    os << i + 1 << ',' << p.alpha << ',' << p.learning_rate << ',' << p.lambda_sd << ',' << p.metric << ','
       << p.best_epoch << ',' << p.epochs_run << '\n';
  }
  return os.str();
}

/// Grid search over alpha, learning rate and spectral-decoupling strength.
/// Writes the leaderboard and `best_config.json`, the input config with the
/// winning point applied.
inline GridResult cmd_train_grid(const RunConfig& cfg, const GridSpec& spec, const fs::path& dataset_dir,
                                 const fs::path& out_dir) {
  cfg.validate();
  spec.validate();
  const LoadedDataset ds = read_dataset(dataset_dir);
  detail::check_dataset_labels(ds, cfg.model);
  fs::create_directories(out_dir);
  detail::write_resolved_config(out_dir, cfg);
  GridBudget budget;
  budget.jobs = cfg.jobs;
  const auto g = grid_search<float>(spec, cfg.model, cfg.train, cfg.effective_loss(), ds.split("train"), ds.split("val"),
                                    budget);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : g.leaderboard) {
    rows.push_back({{"alpha", p.alpha},
                    {"learning_rate", p.learning_rate},
                    {"lambda_sd", p.lambda_sd},
                    {"metric", p.metric},
                    {"best_epoch", p.best_epoch},
                    {"epochs_run", p.epochs_run}});
  }
  nlohmann::json board = {{"grid", spec}, {"selection_metric", to_string(resolve_selection_metric(
                                                                   cfg.train.selection_metric, ds.split("val")))},
                          {"leaderboard", rows}};
  write_file_atomic(out_dir / "leaderboard.json", board.dump(2) + "\n");
  write_file_atomic(out_dir / "leaderboard.csv", leaderboard_csv(g));
  RunConfig best = cfg;
  best.model.alpha = g.best.alpha;
  best.train.learning_rate = g.best.learning_rate;
  best.loss.lambda_sd = g.best.lambda_sd;
  write_file_atomic(out_dir / "best_config.json", dump_run_config(best));
  return g;
}

// ---------------------------------------------------------------- eval

struct EvalRequest {
  fs::path checkpoint;
  fs::path dataset;
  std::string split = "test";
  fs::path out_dir;
  std::optional<fs::path> comparator;  // report.json of a competing model
  SaliencySource saliency = SaliencySource::kBuiltin;
};

inline EvalReport read_report(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  const auto problems = validate_report_json(j);
  if (!problems.empty()) throw FormatError(path.string() + ": " + problems.front());
  return report_from_json(j);
}

inline EvalOptions eval_options(const RunConfig& cfg, const LoadedDataset& ds) {
  EvalOptions opts;
  opts.binarization = cfg.eval.method();
  opts.permutation_iterations = cfg.eval.permutation_iterations;
  opts.seed = cfg.eval.seed;
  opts.jobs = cfg.jobs;
  if (ds.strata_bounds) opts.bounds = *ds.strata_bounds;
  return opts;
}

inline EvalReport cmd_eval(const RunConfig& cfg, const EvalRequest& req) {
  const Checkpoint ck = read_checkpoint(req.checkpoint);
  const LoadedDataset ds = read_dataset(req.dataset);
  detail::check_dataset_labels(ds, ck.config);
  std::optional<EvalReport> comparator;
  if (req.comparator) comparator = read_report(*req.comparator);
  EvalOptions opts = eval_options(cfg, ds);
  opts.saliency = req.saliency;
  if (comparator) opts.comparator = &*comparator;
  const EvalReport report = evaluate_dataset(ck.params, ck.config, ds.split(req.split), opts);
  fs::create_directories(req.out_dir);
  RunConfig resolved = cfg;
  resolved.model = ck.config;
  detail::write_resolved_config(req.out_dir, resolved);
  write_file_atomic(req.out_dir / kReportJsonFile, report_to_json(report).dump(2) + "\n");
  write_file_atomic(req.out_dir / kReportCsvFile, report_to_csv(report));
  return report;
}

// ---------------------------------------------------------------- heatmap

struct HeatmapRequest {
  fs::path checkpoint;
  fs::path bag;
  std::size_t label = 0;
  std::size_t upsample = 1;
  bool masked = false;
  fs::path out;
};

inline GrayImage cmd_heatmap(const HeatmapRequest& req) {
  if (req.upsample < 1) throw ArgumentError("--upsample must be >= 1");
  const Checkpoint ck = read_checkpoint(req.checkpoint);
  if (req.label >= ck.config.num_labels) {
    throw ArgumentError("label index " + std::to_string(req.label) + " out of range (num_labels = " +
                        std::to_string(ck.config.num_labels) + ")");
  }
  const BagOfPatches bag = read_bag(req.bag);
  if (bag.embed_dim() != ck.config.embed_dim) throw DimensionError("bag embed_dim does not match the checkpoint");
  const auto fwd = forward_bag(bag, ck.params, ck.config);
  const auto& full = req.masked ? fwd.prediction.masked : fwd.prediction.fused;
  const GrayImage img = render_heatmap(full, req.label, req.upsample);
  if (req.out.has_parent_path()) fs::create_directories(req.out.parent_path());
  write_pgm(req.out, img);
  return img;
}

// ---------------------------------------------------------------- ablate

struct AblationRow {
  std::string name;
  bool context_suppression = false;
  bool smoothmax = false;
  bool regularizer = false;
  std::optional<double> auc;
  std::optional<double> dice;
};

/// The four rows, weakest first. Rows without SmoothMax use max pooling.
inline std::array<AblationRow, 4> ablation_rows() {
  return {{{"none", false, false, false, {}, {}},
           {"CS", true, false, false, {}, {}},
           {"CS+SM", true, true, false, {}, {}},
           {"CS+SM+Rg", true, true, true, {}, {}}}};
}

inline RunConfig ablation_config(const RunConfig& base, const AblationRow& row) {
  RunConfig c = base;
  c.model.context_enabled = row.context_suppression;
  c.model.pooling_mode = row.smoothmax ? PoolingMode::kSmoothMax : PoolingMode::kMax;
  c.regularizer = row.regularizer;
  return c;
}

inline std::string ablation_markdown(const std::vector<AblationRow>& rows) {
  std::string s = "| CS | SM | Rg | AUC | Dice |\n|----|----|----|-----|------|\n";
  auto mark = [](bool b) { return b ? "x" : "-"; };
  for (const auto& r : rows) {
    s += std::string("| ") + mark(r.context_suppression) + " | " + mark(r.smoothmax) + " | " + mark(r.regularizer) +
         " | " + detail::format_metric(r.auc) + " | " + detail::format_metric(r.dice) + " |\n";
  }
  return s;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "row,cs,sm,rg,auc,dice\n";
  for (const auto& r : rows) {
    os << r.name << ',' << r.context_suppression << ',' << r.smoothmax << ',' << r.regularizer << ',';
    if (r.auc) os << *r.auc;
    os << ',';
    if (r.dice) os << *r.dice;
    os << '\n';
  }
  return os.str();
}

/// Trains and evaluates each row in its own subdirectory (row0 .. row3) with
/// the same calls as `train` followed by `eval`.
inline std::vector<AblationRow> cmd_ablate(const RunConfig& base, const fs::path& dataset_dir, const fs::path& out_dir,
                                           const std::string& split = "test") {
  base.validate();
  fs::create_directories(out_dir);
  detail::write_resolved_config(out_dir, base);
  std::vector<AblationRow> rows;
  const auto specs = ablation_rows();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    AblationRow row = specs[i];
    const RunConfig cfg = ablation_config(base, row);
    const fs::path dir = out_dir / ("row" + std::to_string(i));
    cmd_train(cfg, dataset_dir, dir);
    EvalRequest req;
    req.checkpoint = dir / kCheckpointFile;
    req.dataset = dataset_dir;
    req.split = split;
    req.out_dir = dir;
    const EvalReport rep = cmd_eval(cfg, req);
    row.auc = rep.auc_mean;
    if (rep.dice_positive) row.dice = rep.dice_positive->mean;
    rows.push_back(row);
  }
  write_file_atomic(out_dir / "ablation.md", ablation_markdown(rows));
  write_file_atomic(out_dir / "ablation.csv", ablation_csv(rows));
  return rows;
}

}  // namespace insight
