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

// Dynamic thresholding by Otsu's method over a fixed-bin histogram.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "insight/common.hpp"

namespace insight {

struct OtsuResult {
  double threshold = 0;
  double intra_class_variance = 0;  // weighted within-class variance at `threshold`
  bool degenerate = false;
};

inline constexpr double kOtsuDegenerateRange = 1e-9;

/// Histogram bin of `v` for `bins` equal-width bins spanning [lo, hi].
inline std::size_t otsu_bin(double v, double lo, double hi, std::size_t bins) {
  const double width = (hi - lo) / static_cast<double>(bins);
  const auto b = static_cast<std::size_t>(std::max(0.0, std::floor((v - lo) / width)));
  return std::min(b, bins - 1);
}

/// Candidate boundary k (1 <= k < bins) separates bins [0, k) from [k, bins).
inline double otsu_boundary(double lo, double hi, std::size_t bins, std::size_t k) {
  return lo + static_cast<double>(k) * (hi - lo) / static_cast<double>(bins);
}

/// Exhaustive scan over all bin boundaries; returns the boundary with the
/// smallest weighted within-class variance (first one on ties). A range below
/// 1e-9 is reported as degenerate with threshold = min.
template <typename V>
OtsuResult otsu_threshold(std::span<const V> values, std::size_t bins = 256) {
  if (values.empty()) throw ArgumentError("otsu_threshold: empty input");
  if (bins < 2) throw ConfigError("otsu_threshold: need at least 2 bins");
  double lo = static_cast<double>(values[0]), hi = lo;
  for (V v : values) {
    if (!std::isfinite(static_cast<double>(v))) throw ArgumentError("otsu_threshold: non-finite value");
    lo = std::min(lo, static_cast<double>(v));
    hi = std::max(hi, static_cast<double>(v));
  }
  const double n = static_cast<double>(values.size());

  // Sums are taken over (v - lo) to limit cancellation.
  std::vector<double> count(bins, 0.0), sum(bins, 0.0), sumsq(bins, 0.0);
  double total = 0, total_sq = 0;
  for (V raw : values) {
    const double v = static_cast<double>(raw);
    const double d = v - lo;
    total += d;
    total_sq += d * d;
    if (hi - lo >= kOtsuDegenerateRange) {
      const std::size_t b = otsu_bin(v, lo, hi, bins);
      count[b] += 1;
      sum[b] += d;
      sumsq[b] += d * d;
    }
  }
  if (hi - lo < kOtsuDegenerateRange) {
    const double mean = total / n;
    return {lo, std::max(0.0, total_sq / n - mean * mean), true};
  }

  OtsuResult best{lo, 0, false};
  bool found = false;
  double n0 = 0, s0 = 0;
  for (std::size_t k = 1; k < bins; ++k) {
    n0 += count[k - 1];
    s0 += sum[k - 1];
    const double n1 = n - n0;
    if (n0 == 0 || n1 == 0) continue;
    const double s1 = total - s0;
    const double within = std::max(0.0, (total_sq - s0 * s0 / n0 - s1 * s1 / n1) / n);
    if (!found || within < best.intra_class_variance) {
      best.threshold = otsu_boundary(lo, hi, bins, k);
      best.intra_class_variance = within;
      found = true;
    }
  }
  return best;
}

template <typename V>
OtsuResult otsu_threshold(const std::vector<V>& values, std::size_t bins = 256) {
  return otsu_threshold(std::span<const V>(values), bins);
}

}  // namespace insight
