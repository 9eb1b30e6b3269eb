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

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "insight/model/params.hpp"

namespace insight {

enum class SelectionMetric { kAuto, kValidationDice, kValidationAuc };

inline std::string to_string(SelectionMetric m) {
  switch (m) {
    case SelectionMetric::kAuto: return "auto";
    case SelectionMetric::kValidationDice: return "validation_dice";
    case SelectionMetric::kValidationAuc: return "validation_auc";
  }
  return "?";
}

inline SelectionMetric parse_selection_metric(const std::string& s) {
  if (s == "auto") return SelectionMetric::kAuto;
  if (s == "validation_dice") return SelectionMetric::kValidationDice;
  if (s == "validation_auc") return SelectionMetric::kValidationAuc;
  throw ConfigError("unknown selection metric '" + s + "'");
}

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t max_epochs = 50;
  std::size_t patience = 8;
  // auto: validation Dice when every validation bag carries masks, else AUC.
  SelectionMetric selection_metric = SelectionMetric::kAuto;
  std::uint64_t seed = 0;
  std::size_t accumulate_bags = 1;  // bags per optimizer step

  void validate() const {
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
    if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be >= 0");
    if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ConfigError("betas must be in [0, 1)");
    if (!(adam_eps > 0)) throw ConfigError("adam_eps must be > 0");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (accumulate_bags < 1) throw ConfigError("accumulate_bags must be >= 1");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
       {"beta1", c.beta1},                 {"beta2", c.beta2},
       {"adam_eps", c.adam_eps},           {"max_epochs", c.max_epochs},
       {"patience", c.patience},           {"selection_metric", to_string(c.selection_metric)},
       {"seed", c.seed},                   {"accumulate_bags", c.accumulate_bags}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("learning_rate", c.learning_rate);
  get("weight_decay", c.weight_decay);
  get("beta1", c.beta1);
  get("beta2", c.beta2);
  get("adam_eps", c.adam_eps);
  get("max_epochs", c.max_epochs);
  get("patience", c.patience);
  if (j.contains("selection_metric")) c.selection_metric = parse_selection_metric(j.at("selection_metric").get<std::string>());
  get("seed", c.seed);
  get("accumulate_bags", c.accumulate_bags);
}

/// Moment buffers for one flat parameter vector.
struct AdamWMoments {
  std::vector<double> m;
  std::vector<double> v;
};

/// AdamW with decoupled weight decay: w <- w - lr*wd*w, then the
/// bias-corrected Adam update. `step` is the 1-based index of this update.
template <typename W>
void adamw_update(std::span<W> weights, std::span<const W> grads, AdamWMoments& state, std::uint64_t step,
                  const TrainConfig& cfg) {
  if (weights.size() != grads.size()) throw DimensionError("adamw_update: gradient length mismatch");
  if (state.m.size() != weights.size()) {
    state.m.assign(weights.size(), 0.0);
    state.v.assign(weights.size(), 0.0);
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const double decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    double w = static_cast<double>(weights[i]) * decay;
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    w -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    weights[i] = static_cast<W>(w);
  }
}

/// Optimizer state for a whole ModelParams, keyed by parameter name.
class AdamW {
 public:
  explicit AdamW(TrainConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  /// Applies one update from the accumulated gradients (scaled by
  /// `grad_scale`) and leaves the gradients untouched.
  template <Real T>
  void step(ModelParams<T>& params, double grad_scale = 1.0) {
    ++step_;
    params.visit([&](const std::string& name, GradPair<T>& p) {
      if (!p.grad.all_finite()) {
        throw NumericalError("non-finite gradient in '" + name + "' at optimizer step " + std::to_string(step_));
      }
      std::vector<T> g(p.grad.data().begin(), p.grad.data().end());
      if (grad_scale != 1.0) {
        for (auto& v : g) v = static_cast<T>(v * grad_scale);
      }
      adamw_update(p.value.data(), std::span<const T>(g), moments_[name], step_, cfg_);
    });
  }

  std::uint64_t step_count() const { return step_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  TrainConfig cfg_;
  std::uint64_t step_ = 0;
  std::map<std::string, AdamWMoments> moments_;
};

}  // namespace insight
