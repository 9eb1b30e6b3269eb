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
#include <random>
#include <span>

#include "insight/common.hpp"

namespace insight {

/// Paired one-tailed sign-flip permutation test of H1: mean(diffs) > 0.
/// p = (1 + #{permuted mean >= observed mean}) / (1 + iterations).
inline double permutation_test(std::span<const double> diffs, std::size_t iterations, std::uint64_t seed) {
  if (diffs.empty()) throw ArgumentError("permutation_test: need at least one pair");
  if (iterations < 1) throw ArgumentError("permutation_test: need at least one iteration");
  const double n = static_cast<double>(diffs.size());
  double observed = 0, scale = 0;
  for (double d : diffs) {
    observed += d;
    scale = std::max(scale, std::abs(d));
  }
  observed /= n;
  // Sums of the same magnitudes in a different sign pattern can differ by rounding.
  const double tol = 1e-12 * std::max(1.0, scale);

  std::mt19937_64 rng(seed);
  std::size_t hits = 0;
  for (std::size_t it = 0; it < iterations; ++it) {
    double s = 0;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < diffs.size(); ++i) {
      if (i % 64 == 0) bits = rng();
      s += (bits & 1) ? diffs[i] : -diffs[i];
      bits >>= 1;
    }
    if (s / n >= observed - tol) ++hits;
  }
  return static_cast<double>(1 + hits) / static_cast<double>(1 + iterations);
}

}  // namespace insight
