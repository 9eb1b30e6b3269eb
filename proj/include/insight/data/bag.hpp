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
#include <string>
#include <utility>
#include <vector>

#include "insight/tensor.hpp"

namespace insight {

/// 2-D binary mask, row-major, one byte per pixel holding 0 or 1.
struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> data;

  BinaryMask() = default;
  BinaryMask(std::size_t h, std::size_t w) : height(h), width(w), data(h * w, 0) {}

  std::uint8_t& at(std::size_t y, std::size_t x) { return data[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return data[y * width + x]; }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
  }
  bool empty_mask() const { return count() == 0; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

struct Patch {
  Tensor<float> embedding;  // embed_dim x h x w
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  friend bool operator==(const Patch&, const Patch&) = default;
};

/// A weakly labelled set of patch embeddings. `masks`, when present, holds one
/// ground-truth mask per label aligned to the stitched grid.
struct BagOfPatches {
  std::string bag_id;
  std::vector<Patch> patches;
  std::vector<std::uint8_t> labels;
  std::vector<BinaryMask> masks;

  std::size_t num_labels() const { return labels.size(); }
  bool has_masks() const { return !masks.empty(); }

  std::size_t embed_dim() const { return patches.at(0).embedding.dim(0); }
  std::size_t patch_height() const { return patches.at(0).embedding.dim(1); }
  std::size_t patch_width() const { return patches.at(0).embedding.dim(2); }

  std::pair<std::size_t, std::size_t> grid_extent() const {
    std::size_t r = 0, c = 0;
    for (const auto& p : patches) {
      r = std::max<std::size_t>(r, p.row);
      c = std::max<std::size_t>(c, p.col);
    }
    return {r + 1, c + 1};
  }

  std::pair<std::size_t, std::size_t> stitched_extent() const {
    auto [r, c] = grid_extent();
    return {r * patch_height(), c * patch_width()};
  }

  /// Throws LayoutError / DimensionError when an invariant is violated.
  void validate() const {
    if (patches.empty()) throw ArgumentError("bag '" + bag_id + "' has no patches");
    if (labels.empty()) throw ArgumentError("bag '" + bag_id + "' has no labels");
    const auto& shape = patches.front().embedding.shape();
    if (shape.size() != 3) throw DimensionError("patch embeddings must be rank 3");
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const auto& p : patches) {
      if (p.embedding.shape() != shape) throw DimensionError("bag '" + bag_id + "': patch shapes differ");
      if (!seen.emplace(p.row, p.col).second) {
        throw LayoutError("bag '" + bag_id + "': duplicate patch coordinate (" + std::to_string(p.row) + ", " +
                          std::to_string(p.col) + ")");
      }
    }
    for (auto l : labels) {
      if (l > 1) throw ArgumentError("bag '" + bag_id + "': labels must be 0 or 1");
    }
    if (has_masks()) {
      if (masks.size() != labels.size()) throw DimensionError("bag '" + bag_id + "': one mask per label required");
      auto [h, w] = stitched_extent();
      for (const auto& m : masks) {
        if (m.height != h || m.width != w || m.data.size() != h * w) {
          throw DimensionError("bag '" + bag_id + "': mask extents differ from stitched grid");
        }
      }
    }
  }

  friend bool operator==(const BagOfPatches&, const BagOfPatches&) = default;
};

}  // namespace insight
