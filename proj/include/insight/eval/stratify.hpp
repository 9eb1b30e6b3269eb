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

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "insight/eval/metrics.hpp"

namespace insight {

enum class Stratum { kSmall = 0, kModerate = 1, kLarge = 2 };

inline constexpr std::array<const char*, 3> kStratumNames = {"small", "moderate", "large"};

inline const char* to_string(Stratum s) { return kStratumNames[static_cast<std::size_t>(s)]; }

/// Pixel-area bounds partitioning (0, inf): small < small_max <= moderate < moderate_max <= large.
struct StrataBounds {
  double small_max = 40;
  double moderate_max = 140;

  Stratum classify(double area) const {
    if (area < small_max) return Stratum::kSmall;
    if (area < moderate_max) return Stratum::kModerate;
    return Stratum::kLarge;
  }

  void validate() const {
    if (!(small_max > 0 && moderate_max > small_max)) throw ConfigError("strata bounds must satisfy 0 < small < moderate");
  }

  friend bool operator==(const StrataBounds&, const StrataBounds&) = default;
};

/// Fraction of the lesion bounding box added on each side of the scoring window.
inline constexpr double kLesionWindowDilation = 0.25;

struct LesionScore {
  std::string bag_id;
  std::size_t label = 0;
  std::size_t index = 0;  // component index within the ground-truth mask
  std::size_t area = 0;
  Stratum stratum = Stratum::kSmall;
  double dice = 0;

  friend bool operator==(const LesionScore&, const LesionScore&) = default;
};

/// Dice between the lesion and the prediction restricted to the lesion's
/// bounding box dilated by 25% per side.
inline double lesion_window_dice(const BinaryMask& pred, const Component& lesion, std::size_t height,
                                 std::size_t width) {
  const std::size_t bh = lesion.max_y - lesion.min_y + 1, bw = lesion.max_x - lesion.min_x + 1;
  const auto dy = static_cast<std::size_t>(std::ceil(kLesionWindowDilation * static_cast<double>(bh)));
  const auto dx = static_cast<std::size_t>(std::ceil(kLesionWindowDilation * static_cast<double>(bw)));
  const std::size_t y0 = lesion.min_y >= dy ? lesion.min_y - dy : 0;
  const std::size_t x0 = lesion.min_x >= dx ? lesion.min_x - dx : 0;
  const std::size_t y1 = std::min(height - 1, lesion.max_y + dy);
  const std::size_t x1 = std::min(width - 1, lesion.max_x + dx);
  std::size_t p = 0, inter = 0;
  for (std::size_t y = y0; y <= y1; ++y) {
    for (std::size_t x = x0; x <= x1; ++x) p += pred.data[y * width + x] != 0;
  }
  for (std::size_t q : lesion.pixels) inter += pred.data[q] != 0;
  const std::size_t g = lesion.area;
  if (p + g == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(p + g);
}

/// Scores every ground-truth lesion component of one (bag, label).
inline std::vector<LesionScore> score_lesions(const std::string& bag_id, std::size_t label, const BinaryMask& pred,
                                              const BinaryMask& gt, const StrataBounds& bounds) {
  if (pred.height != gt.height || pred.width != gt.width) throw DimensionError("score_lesions: extents differ");
  std::vector<LesionScore> out;
  const auto cc = connected_components(gt);
  for (std::size_t i = 0; i < cc.components.size(); ++i) {
    const auto& comp = cc.components[i];
    LesionScore s;
    s.bag_id = bag_id;
    s.label = label;
    s.index = i;
    s.area = comp.area;
    s.stratum = bounds.classify(static_cast<double>(comp.area));
    s.dice = lesion_window_dice(pred, comp, gt.height, gt.width);
    out.push_back(std::move(s));
  }
  return out;
}

/// Per-stratum mean/std of lesion Dice; an empty stratum is std::nullopt.
inline std::array<std::optional<MeanStd>, 3> stratified_dice(const std::vector<LesionScore>& lesions) {
  std::array<std::vector<double>, 3> buckets;
  for (const auto& l : lesions) buckets[static_cast<std::size_t>(l.stratum)].push_back(l.dice);
  std::array<std::optional<MeanStd>, 3> out;
  for (std::size_t s = 0; s < 3; ++s) {
    if (!buckets[s].empty()) out[s] = mean_std(buckets[s]);
  }
  return out;
}

}  // namespace insight
