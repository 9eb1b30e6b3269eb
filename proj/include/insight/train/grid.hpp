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
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "insight/train/trainer.hpp"
#include "insight/util/parallel.hpp"

namespace insight {

struct GridSpec {
  std::vector<double> alphas = {4, 6, 8, 10};
  std::vector<double> learning_rates = {5e-5, 1e-4, 3e-4};
  std::vector<double> lambdas = {0, 0.01, 0.05};

  void validate() const {
    if (alphas.empty() || learning_rates.empty() || lambdas.empty()) throw ConfigError("grid axes must be non-empty");
  }
  std::size_t size() const { return alphas.size() * learning_rates.size() * lambdas.size(); }
};

inline void from_json(const nlohmann::json& j, GridSpec& g) {
  if (j.contains("alphas")) j.at("alphas").get_to(g.alphas);
  if (j.contains("learning_rates")) j.at("learning_rates").get_to(g.learning_rates);
  if (j.contains("lambdas")) j.at("lambdas").get_to(g.lambdas);
}

inline void to_json(nlohmann::json& j, const GridSpec& g) {
  j = {{"alphas", g.alphas}, {"learning_rates", g.learning_rates}, {"lambdas", g.lambdas}};
}

struct GridPoint {
  double alpha = 0;
  double learning_rate = 0;
  double lambda_sd = 0;
  double metric = 0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

/// Higher metric first; ties go to higher alpha, then lower learning rate,
/// then lower lambda.
inline bool grid_point_better(const GridPoint& a, const GridPoint& b) {
  return std::make_tuple(-a.metric, -a.alpha, a.learning_rate, a.lambda_sd) <
         std::make_tuple(-b.metric, -b.alpha, b.learning_rate, b.lambda_sd);
}

struct GridResult {
  GridPoint best;
  std::vector<GridPoint> leaderboard;  // sorted best-first
};

struct GridBudget {
  std::size_t max_epochs = 0;  // 0 keeps the base TrainConfig value
  std::size_t jobs = 1;        // grid points trained concurrently
};

/// Trains one model per grid point from the same initialization seed and
/// ranks the points on the validation selection metric.
template <Real T>
GridResult grid_search(const GridSpec& spec, const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                       const LossConfig& loss_cfg, const std::vector<BagOfPatches>& train_bags,
                       const std::vector<BagOfPatches>& val_bags, const GridBudget& budget = {}) {
  spec.validate();
  std::vector<GridPoint> points;
  for (double a : spec.alphas) {
    for (double lr : spec.learning_rates) {
      for (double l : spec.lambdas) points.push_back({a, lr, l});
    }
  }
  parallel_for(points.size(), budget.jobs, [&](std::size_t i) {
    auto& p = points[i];
    ModelConfig mc = model_cfg;
    mc.alpha = p.alpha;
    TrainConfig tc = train_cfg;
    tc.learning_rate = p.learning_rate;
    if (budget.max_epochs > 0) {
      tc.max_epochs = budget.max_epochs;
      tc.patience = std::min(tc.patience, tc.max_epochs);
    }
    LossConfig lc = loss_cfg;
    lc.lambda_sd = p.lambda_sd;
    const auto r = train(init_params<T>(mc, tc.seed), mc, train_bags, val_bags, tc, lc);
    p.metric = r.best_metric;
    p.best_epoch = r.best_epoch;
    p.epochs_run = r.history.size() - 1;
  });
  GridResult out;
  out.leaderboard = points;
  std::sort(out.leaderboard.begin(), out.leaderboard.end(), grid_point_better);
  out.best = out.leaderboard.front();
  return out;
}

}  // namespace insight
