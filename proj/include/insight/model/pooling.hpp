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

// Global pooling operators that reduce one heatmap channel to a bag score.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "insight/common.hpp"

namespace insight {

/// Boltzmann-weighted average sum_i h_i e^{alpha h_i} / sum_i e^{alpha h_i},
/// evaluated with max subtraction.
template <typename V>
double smoothmax_pool(std::span<const V> h, double alpha) {
  if (h.empty()) throw ArgumentError("smoothmax_pool: empty channel");
  if (!(alpha > 0)) throw ConfigError("smoothmax_pool: alpha must be > 0");
  const double hmax = static_cast<double>(*std::max_element(h.begin(), h.end()));
  double num = 0, den = 0;
  for (V raw : h) {
    const double v = static_cast<double>(raw);
    const double w = std::exp(alpha * (v - hmax));
    num += v * w;
    den += w;
  }
  return num / den;
}

/// d(pool)/d(h_i) = w_i (1 + alpha (h_i - pool)) with w the softmax weights.
template <typename V>
std::vector<double> smoothmax_pool_grad(std::span<const V> h, double alpha) {
  const double y = smoothmax_pool(h, alpha);
  const double hmax = static_cast<double>(*std::max_element(h.begin(), h.end()));
  std::vector<double> w(h.size());
  double den = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    w[i] = std::exp(alpha * (static_cast<double>(h[i]) - hmax));
    den += w[i];
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    w[i] = (w[i] / den) * (1.0 + alpha * (static_cast<double>(h[i]) - y));
  }
  return w;
}

/// Index of the maximum; first in order on ties.
template <typename V>
std::size_t argmax_index(std::span<const V> h) {
  if (h.empty()) throw ArgumentError("max_pool: empty channel");
  return static_cast<std::size_t>(std::max_element(h.begin(), h.end()) - h.begin());
}

template <typename V>
double max_pool(std::span<const V> h) {
  return static_cast<double>(h[argmax_index(h)]);
}

/// (mean_i h_i^p)^(1/p). Not bounded to [0,1] in general; callers clip.
template <typename V>
double lp_pool(std::span<const V> h, double p) {
  if (h.empty()) throw ArgumentError("lp_pool: empty channel");
  if (!(p >= 2)) throw ConfigError("lp_pool: exponent must be >= 2");
  double acc = 0;
  for (V raw : h) acc += std::pow(std::abs(static_cast<double>(raw)), p);
  return std::pow(acc / static_cast<double>(h.size()), 1.0 / p);
}

/// d(pool)/d(h_i) = h_i^(p-1) pool^(1-p) / n; zero everywhere when pool == 0.
template <typename V>
std::vector<double> lp_pool_grad(std::span<const V> h, double p) {
  const double y = lp_pool(h, p);
  std::vector<double> g(h.size(), 0.0);
  if (y <= 0) return g;
  const double scale = std::pow(y, 1.0 - p) / static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double v = static_cast<double>(h[i]);
    g[i] = scale * std::copysign(std::pow(std::abs(v), p - 1), v);
  }
  return g;
}

}  // namespace insight
