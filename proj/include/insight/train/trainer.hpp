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

#include <algorithm>
#include <chrono>
#include <functional>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "insight/eval/evaluate.hpp"
#include "insight/model/forward.hpp"
#include "insight/train/adamw.hpp"
#include "insight/train/loss.hpp"

namespace insight {

struct EpochRecord {
  std::size_t epoch = 0;  // 0 = model before any update
  double train_loss = 0;
  double val_metric = 0;
  double wall_time_ms = 0;
  bool selected = false;  // became the best checkpoint at this epoch
};

inline nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"train_loss", r.train_loss},
          {"val_metric", r.val_metric},
          {"wall_time_ms", r.wall_time_ms},
          {"selected", r.selected}};
}

/// JSON-lines history, one record per epoch.
inline std::string history_to_jsonl(const std::vector<EpochRecord>& history) {
  std::string out;
  for (const auto& r : history) out += to_json(r).dump() + "\n";
  return out;
}

template <Real T>
struct TrainResult {
  ModelParams<T> best;
  std::size_t best_epoch = 0;
  double best_metric = 0;
  SelectionMetric metric = SelectionMetric::kValidationAuc;
  std::vector<EpochRecord> history;
};

inline SelectionMetric resolve_selection_metric(SelectionMetric requested, const std::vector<BagOfPatches>& val) {
  if (requested != SelectionMetric::kAuto) return requested;
  const bool masks = !val.empty() && std::all_of(val.begin(), val.end(), [](const auto& b) { return b.has_masks(); });
  return masks ? SelectionMetric::kValidationDice : SelectionMetric::kValidationAuc;
}

/// Validation score used for checkpoint selection (higher is better).
template <Real T>
double validation_metric(const ModelParams<T>& params, const ModelConfig& cfg, const std::vector<BagOfPatches>& val,
                         SelectionMetric metric, std::size_t jobs = 1) {
  EvalOptions opts;
  opts.jobs = jobs;
  const EvalReport r = evaluate_dataset(params, cfg, val, opts);
  if (metric == SelectionMetric::kValidationDice) {
    if (!r.dice_positive) throw MetricError("validation Dice undefined: no positive bags with masks");
    return r.dice_positive->mean;
  }
  if (!r.auc_mean) throw MetricError("validation AUC undefined: validation split lacks both classes");
  return *r.auc_mean;
}

template <Real T>
double bag_loss(const BagOfPatches& bag, const ModelParams<T>& params, const ModelConfig& cfg, const LossConfig& loss) {
  const auto fwd = forward_bag(bag, params, cfg);
  const std::vector<double> y(bag.labels.begin(), bag.labels.end());
  return total_loss_and_grad(fwd.prediction.y_hat, y, loss).loss;
}

struct TrainOptions {
  std::size_t jobs = 1;  // bag-parallel validation
  /// Called after every epoch record is appended.
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Seeded per-epoch shuffles, one bag per forward/backward, an AdamW update
/// every `accumulate_bags` bags, checkpoint selection on the validation metric
/// and early stopping after `patience` epochs without improvement.
template <Real T>
TrainResult<T> train(ModelParams<T> params, const ModelConfig& model_cfg, const std::vector<BagOfPatches>& train_bags,
                     const std::vector<BagOfPatches>& val_bags, const TrainConfig& train_cfg, const LossConfig& loss_cfg,
                     const TrainOptions& options = {}) {
  model_cfg.validate();
  train_cfg.validate();
  loss_cfg.validate();
  if (train_bags.empty() || val_bags.empty()) throw ArgumentError("train: training and validation splits must be non-empty");
  for (const auto* split : {&train_bags, &val_bags}) {
    for (const auto& b : *split) {
      if (b.labels.size() != model_cfg.num_labels) throw ArgumentError("train: bag '" + b.bag_id + "' label count != num_labels");
    }
  }

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed_ms = [&] { return std::chrono::duration<double, std::milli>(clock::now() - t0).count(); };

  TrainResult<T> result;
  result.metric = resolve_selection_metric(train_cfg.selection_metric, val_bags);

  auto record = [&](EpochRecord rec) {
    result.history.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  };

  {
    double loss0 = 0;
    for (const auto& b : train_bags) loss0 += bag_loss(b, params, model_cfg, loss_cfg);
    EpochRecord r0;
    r0.train_loss = loss0 / static_cast<double>(train_bags.size());
    r0.val_metric = validation_metric(params, model_cfg, val_bags, result.metric, options.jobs);
    r0.wall_time_ms = elapsed_ms();
    r0.selected = true;
    result.best = params;
    result.best_metric = r0.val_metric;
    record(r0);
  }

  AdamW opt(train_cfg);
  std::mt19937_64 rng(train_cfg.seed);
  std::vector<std::size_t> order(train_bags.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t since_improvement = 0;

  for (std::size_t epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    params.zero_grad();
    double loss_sum = 0;
    std::size_t pending = 0;
    for (std::size_t idx : order) {
      const auto& bag = train_bags[idx];
      const auto fwd = forward_bag(bag, params, model_cfg);
      const std::vector<double> y(bag.labels.begin(), bag.labels.end());
      const auto lg = total_loss_and_grad(fwd.prediction.y_hat, y, loss_cfg);
      if (!std::isfinite(lg.loss)) {
        throw NumericalError("training diverged: non-finite loss on bag '" + bag.bag_id + "' in epoch " +
                             std::to_string(epoch));
      }
      loss_sum += lg.loss;
      backward_bag(fwd.trace, params, model_cfg, lg.grad_y_hat);
      if (++pending == train_cfg.accumulate_bags) {
        opt.step(params, 1.0 / static_cast<double>(pending));
        params.zero_grad();
        pending = 0;
      }
    }
    if (pending > 0) {
      opt.step(params, 1.0 / static_cast<double>(pending));
      params.zero_grad();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_bags.size());
    rec.val_metric = validation_metric(params, model_cfg, val_bags, result.metric, options.jobs);
    rec.wall_time_ms = elapsed_ms();
    if (rec.val_metric > result.best_metric) {
      rec.selected = true;
      result.best = params;
      result.best_metric = rec.val_metric;
      result.best_epoch = epoch;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    record(rec);
    if (since_improvement >= train_cfg.patience) break;
  }
  result.best.zero_grad();
  return result;
}

}  // namespace insight
