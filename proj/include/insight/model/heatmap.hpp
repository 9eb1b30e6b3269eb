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
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "insight/ops.hpp"
#include "insight/tensor.hpp"

namespace insight {

/// Per-label relevance map, num_labels x height x width.
template <Real T>
struct Heatmap {
  Tensor<T> values;

  std::size_t num_labels() const { return values.dim(0); }
  std::size_t height() const { return values.dim(1); }
  std::size_t width() const { return values.dim(2); }
};

/// Stitched heatmap over the full slide/volume grid. `coverage` holds one
/// byte per spatial site: 1 where some patch was placed, 0 elsewhere.
template <Real T>
struct FullHeatmap {
  Heatmap<T> map;
  std::vector<std::uint8_t> coverage;
  std::size_t patch_height = 0;
  std::size_t patch_width = 0;

  std::size_t height() const { return map.height(); }
  std::size_t width() const { return map.width(); }
  std::size_t covered_count() const {
    return static_cast<std::size_t>(std::count(coverage.begin(), coverage.end(), std::uint8_t{1}));
  }

  /// Values of one label channel at covered sites, row-major.
  std::vector<T> covered_values(std::size_t label) const {
    std::vector<T> out;
    out.reserve(coverage.size());
    auto plane = map.values.slice(label);
    for (std::size_t i = 0; i < coverage.size(); ++i) {
      if (coverage[i]) out.push_back(plane[i]);
    }
    return out;
  }
};

/// H = sigmoid((1 - sigmoid(H_con)) * H_det). With context disabled, H = sigmoid(H_det).
template <Real T>
Heatmap<T> fuse(const Heatmap<T>& det, const Heatmap<T>& con, bool context_enabled = true) {
  Tensor<T>::require_same_shape(det.values, con.values, "fuse");
  Heatmap<T> out{det.values};
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const T gate = context_enabled ? T(1) - sigmoid(con.values[i]) : T(1);
    out.values[i] = sigmoid(gate * det.values[i]);
  }
  return out;
}

/// Given the fused output and dL/dH, returns (dL/dH_det, dL/dH_con).
template <Real T>
std::pair<Tensor<T>, Tensor<T>> fuse_backward(const Heatmap<T>& det, const Heatmap<T>& con,
                                              const Heatmap<T>& fused, const Tensor<T>& grad,
                                              bool context_enabled = true) {
  Tensor<T>::require_same_shape(fused.values, grad, "fuse_backward");
  Tensor<T> gdet(grad.shape()), gcon(grad.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const T h = fused.values[i];
    const T ga = grad[i] * h * (T(1) - h);
    if (context_enabled) {
      const T s = sigmoid(con.values[i]);
      gdet[i] = ga * (T(1) - s);
      gcon[i] = -ga * det.values[i] * s * (T(1) - s);
    } else {
      gdet[i] = ga;
    }
  }
  return {std::move(gdet), std::move(gcon)};
}

/// H' = H * 1[H > threshold].
template <Real T>
std::vector<T> apply_mask(std::span<const T> h, double threshold) {
  std::vector<T> out(h.begin(), h.end());
  for (auto& v : out) {
    if (!(static_cast<double>(v) > threshold)) v = T(0);
  }
  return out;
}

template <Real T>
struct PlacedHeatmap {
  Heatmap<T> heatmap;
  std::size_t row = 0;
  std::size_t col = 0;
};

/// Places patch heatmaps on a regular grid by their (row, col) coordinates.
/// Sites not covered by any patch stay 0 and are marked in the coverage mask.
template <Real T>
FullHeatmap<T> stitch(const std::vector<PlacedHeatmap<T>>& patches) {
  if (patches.empty()) throw ArgumentError("stitch: no patches");
  const auto& shape = patches.front().heatmap.values.shape();
  if (shape.size() != 3) throw DimensionError("stitch: patch heatmaps must be rank 3");
  std::size_t max_row = 0, max_col = 0;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& p : patches) {
    if (p.heatmap.values.shape() != shape) throw DimensionError("stitch: patch heatmaps differ in shape");
    if (!seen.emplace(p.row, p.col).second) {
      throw LayoutError("stitch: duplicate patch coordinate (" + std::to_string(p.row) + ", " +
                        std::to_string(p.col) + ")");
    }
    max_row = std::max(max_row, p.row);
    max_col = std::max(max_col, p.col);
  }
  const std::size_t c = shape[0], ph = shape[1], pw = shape[2];
  const std::size_t H = (max_row + 1) * ph, W = (max_col + 1) * pw;
  FullHeatmap<T> full;
  full.map.values = Tensor<T>({c, H, W});
  full.coverage.assign(H * W, 0);
  full.patch_height = ph;
  full.patch_width = pw;
  for (const auto& p : patches) {
    for (std::size_t y = 0; y < ph; ++y) {
      const std::size_t gy = p.row * ph + y;
      for (std::size_t x = 0; x < pw; ++x) {
        const std::size_t gx = p.col * pw + x;
        full.coverage[gy * W + gx] = 1;
        for (std::size_t ch = 0; ch < c; ++ch) full.map.values.at(ch, gy, gx) = p.heatmap.values.at(ch, y, x);
      }
    }
  }
  return full;
}

}  // namespace insight
