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
#include <cmath>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "insight/common.hpp"

namespace insight {

struct LossConfig {
  double lambda_sd = 0.01;       // spectral decoupling strength
  double label_smoothing = 0.0;  // s in y <- y(1-s) + s/2
  double eps_clip = 1e-7;        // probability clamp

  void validate() const {
    if (!(lambda_sd >= 0)) throw ConfigError("lambda_sd must be >= 0");
    if (!(label_smoothing >= 0 && label_smoothing < 0.5)) throw ConfigError("label_smoothing must be in [0, 0.5)");
    if (!(eps_clip > 0 && eps_clip < 0.5)) throw ConfigError("eps_clip must be in (0, 0.5)");
  }

  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

inline void to_json(nlohmann::json& j, const LossConfig& c) {
  j = {{"lambda_sd", c.lambda_sd}, {"label_smoothing", c.label_smoothing}, {"eps_clip", c.eps_clip}};
}

inline void from_json(const nlohmann::json& j, LossConfig& c) {
  if (j.contains("lambda_sd")) j.at("lambda_sd").get_to(c.lambda_sd);
  if (j.contains("label_smoothing")) j.at("label_smoothing").get_to(c.label_smoothing);
  if (j.contains("eps_clip")) j.at("eps_clip").get_to(c.eps_clip);
}

namespace detail {
inline void require_same_length(std::size_t a, std::size_t b, const char* where) {
  if (a != b) throw DimensionError(std::string(where) + ": length mismatch");
}
}  // namespace detail

/// Mean over labels of the binary cross-entropy, with optional label smoothing.
inline double bce_loss(std::span<const double> y_hat, std::span<const double> y, const LossConfig& cfg) {
  detail::require_same_length(y_hat.size(), y.size(), "bce_loss");
  if (y_hat.empty()) return 0.0;
  double total = 0;
  for (std::size_t c = 0; c < y.size(); ++c) {
    const double p = std::clamp(y_hat[c], cfg.eps_clip, 1.0 - cfg.eps_clip);
    const double t = y[c] * (1.0 - cfg.label_smoothing) + cfg.label_smoothing / 2;
    total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return total / static_cast<double>(y.size());
}

/// (lambda / 2) * ||z||^2
inline double spectral_decoupling(std::span<const double> z, double lambda_sd) {
  double sq = 0;
  for (double v : z) sq += v * v;
  return 0.5 * lambda_sd * sq;
}

/// d/dz of spectral_decoupling: lambda * z.
inline std::vector<double> spectral_decoupling_grad(std::span<const double> z, double lambda_sd) {
  std::vector<double> g(z.begin(), z.end());
  for (auto& v : g) v *= lambda_sd;
  return g;
}

inline double total_loss(std::span<const double> y_hat, std::span<const double> z, std::span<const double> y,
                         const LossConfig& cfg) {
  return bce_loss(y_hat, y, cfg) + spectral_decoupling(z, cfg.lambda_sd);
}

struct LossAndGrad {
  double loss = 0;
  std::vector<double> grad_y_hat;
};

/// Total loss with z = logit(clamp(y_hat)) and its exact derivative wrt y_hat.
/// Entries outside the clamp range receive zero gradient.
inline LossAndGrad total_loss_and_grad(std::span<const double> y_hat, std::span<const double> y,
                                       const LossConfig& cfg) {
  detail::require_same_length(y_hat.size(), y.size(), "total_loss_and_grad");
  const std::size_t C = y.size();
  LossAndGrad out;
  out.grad_y_hat.assign(C, 0.0);
  std::vector<double> z(C);
  for (std::size_t c = 0; c < C; ++c) {
    const double p = std::clamp(y_hat[c], cfg.eps_clip, 1.0 - cfg.eps_clip);
    z[c] = std::log(p / (1.0 - p));
    if (y_hat[c] != p) continue;
    const double t = y[c] * (1.0 - cfg.label_smoothing) + cfg.label_smoothing / 2;
    const double dbce = (-t / p + (1.0 - t) / (1.0 - p)) / static_cast<double>(C);
    const double dsd = cfg.lambda_sd * z[c] / (p * (1.0 - p));
    out.grad_y_hat[c] = dbce + dsd;
  }
  out.loss = total_loss(y_hat, z, y, cfg);
  return out;
}

}  // namespace insight
