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
#include <deque>
#include <numeric>
#include <span>
#include <vector>

#include "insight/data/bag.hpp"
#include "insight/model/heatmap.hpp"
#include "insight/model/otsu.hpp"

namespace insight {

/// 2|P n G| / (|P| + |G|). Two empty masks score 1.0 (perfect agreement).
inline double dice(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.height != gt.height || pred.width != gt.width || pred.data.size() != gt.data.size()) {
    throw DimensionError("dice: mask extents differ");
  }
  std::size_t inter = 0, p = 0, g = 0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const bool a = pred.data[i] != 0, b = gt.data[i] != 0;
    p += a;
    g += b;
    inter += a && b;
  }
  if (p + g == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(p + g);
}

/// Mann-Whitney AUC: (concordant + 0.5 ties) / (n_pos * n_neg), computed from
/// tie-averaged ranks.
inline double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw DimensionError("auc: scores and labels differ in length");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double n_pos = 0, n_neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]]) {
        n_pos += 1;
        rank_sum += avg_rank;
      } else {
        n_neg += 1;
      }
    }
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) throw MetricError("auc: need at least one positive and one negative");
  return (rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg);
}

struct Component {
  std::size_t area = 0;
  std::size_t min_y = 0, min_x = 0, max_y = 0, max_x = 0;  // inclusive bounding box
  std::vector<std::size_t> pixels;                         // row-major indices
};

struct ComponentLabeling {
  std::vector<int> labels;  // 0 background, k >= 1 component k-1
  std::vector<Component> components;
};

/// 4-connected labeling; components are numbered in row-major order of their
/// first pixel.
inline ComponentLabeling connected_components(const BinaryMask& mask) {
  ComponentLabeling out;
  out.labels.assign(mask.data.size(), 0);
  const std::size_t H = mask.height, W = mask.width;
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < mask.data.size(); ++start) {
    if (!mask.data[start] || out.labels[start]) continue;
    const int id = static_cast<int>(out.components.size()) + 1;
    Component comp;
    comp.min_y = comp.max_y = start / W;
    comp.min_x = comp.max_x = start % W;
    out.labels[start] = id;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      comp.pixels.push_back(p);
      const std::size_t y = p / W, x = p % W;
      comp.min_y = std::min(comp.min_y, y);
      comp.max_y = std::max(comp.max_y, y);
      comp.min_x = std::min(comp.min_x, x);
      comp.max_x = std::max(comp.max_x, x);
      auto visit = [&](std::size_t q) {
        if (mask.data[q] && !out.labels[q]) {
          out.labels[q] = id;
          queue.push_back(q);
        }
      };
      if (y > 0) visit(p - W);
      if (y + 1 < H) visit(p + W);
      if (x > 0) visit(p - 1);
      if (x + 1 < W) visit(p + 1);
    }
    std::sort(comp.pixels.begin(), comp.pixels.end());
    comp.area = comp.pixels.size();
    out.components.push_back(std::move(comp));
  }
  return out;
}

struct Binarization {
  enum class Method { kOtsu, kFixed } method = Method::kOtsu;
  double threshold = 0.5;  // kFixed only
  std::size_t bins = 256;

  static Binarization otsu(std::size_t bins = 256) { return {Method::kOtsu, 0.5, bins}; }
  static Binarization fixed(double t) { return {Method::kFixed, t, 256}; }
};

/// Binary prediction mask from one channel of a stitched heatmap. Uncovered
/// sites are never predicted. Otsu mode keeps entries above the threshold, or
/// every covered entry when the map is degenerate.
template <Real T>
BinaryMask binarize_heatmap(const FullHeatmap<T>& full, std::size_t label, const Binarization& method) {
  if (label >= full.map.num_labels()) throw ArgumentError("binarize_heatmap: label out of range");
  BinaryMask out(full.height(), full.width());
  auto plane = full.map.values.slice(label);
  double threshold = method.threshold;
  bool keep_all = false;
  if (method.method == Binarization::Method::kOtsu) {
    const auto values = full.covered_values(label);
    const OtsuResult r = otsu_threshold(std::span<const T>(values), method.bins);
    threshold = r.threshold;
    keep_all = r.degenerate;
  }
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    if (!full.coverage[i]) continue;
    out.data[i] = (keep_all || static_cast<double>(plane[i]) > threshold) ? 1 : 0;
  }
  return out;
}

struct MeanStd {
  double mean = 0;
  double std = 0;  // population standard deviation
  std::size_t n = 0;

  friend bool operator==(const MeanStd&, const MeanStd&) = default;
};

inline MeanStd mean_std(std::span<const double> v) {
  MeanStd r;
  r.n = v.size();
  if (v.empty()) return r;
  double s = 0;
  for (double x : v) s += x;
  r.mean = s / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(v.size()));
  return r;
}

}  // namespace insight
