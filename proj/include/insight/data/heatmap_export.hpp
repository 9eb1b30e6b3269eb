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
#include <array>
#include <cmath>
#include <filesystem>
#include <vector>

#include "insight/data/pgm.hpp"
#include "insight/model/heatmap.hpp"

namespace insight {

/// Row-major 2-D real field.
struct Field2D {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  friend bool operator==(const Field2D&, const Field2D&) = default;
};

/// Catmull-Rom cubic convolution kernel (a = -0.5).
inline double cubic_kernel(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1) return ((a + 2) * t - (a + 3)) * t * t + 1;
  if (t < 2) return ((a * t - 5 * a) * t + 8 * a) * t - 4 * a;
  return 0;
}

/// Bicubic upsampling by an integer factor with pixel-center alignment and
/// edge-clamped sampling. factor == 1 returns the input unchanged.
inline Field2D bicubic_upsample(const Field2D& in, std::size_t factor) {
  if (factor < 1) throw ArgumentError("bicubic_upsample: factor must be >= 1");
  if (in.values.size() != in.height * in.width || in.values.empty()) throw DimensionError("bicubic_upsample: bad field");
  if (factor == 1) return in;
  Field2D out{in.height * factor, in.width * factor, {}};
  out.values.resize(out.height * out.width);
  const auto H = static_cast<std::ptrdiff_t>(in.height), W = static_cast<std::ptrdiff_t>(in.width);
  auto clampi = [](std::ptrdiff_t v, std::ptrdiff_t n) { return std::clamp<std::ptrdiff_t>(v, 0, n - 1); };
  const double f = static_cast<double>(factor);

  struct Taps {
    std::array<std::ptrdiff_t, 4> idx;
    std::array<double, 4> w;
  };
  auto taps = [&](std::size_t o, std::ptrdiff_t n) {
    const double src = (static_cast<double>(o) + 0.5) / f - 0.5;
    const double base = std::floor(src);
    const double t = src - base;
    Taps tp;
    for (int k = 0; k < 4; ++k) {
      tp.idx[k] = clampi(static_cast<std::ptrdiff_t>(base) - 1 + k, n);
      tp.w[k] = cubic_kernel(t - (k - 1));
    }
    return tp;
  };
  std::vector<Taps> xt(out.width);
  for (std::size_t x = 0; x < out.width; ++x) xt[x] = taps(x, W);
  for (std::size_t y = 0; y < out.height; ++y) {
    const Taps ty = taps(y, H);
    for (std::size_t x = 0; x < out.width; ++x) {
      double acc = 0;
      for (int i = 0; i < 4; ++i) {
        double row = 0;
        for (int j = 0; j < 4; ++j) row += xt[x].w[j] * in.values[static_cast<std::size_t>(ty.idx[i] * W + xt[x].idx[j])];
        acc += ty.w[i] * row;
      }
      out.values[y * out.width + x] = acc;
    }
  }
  return out;
}

/// Round-half-away-from-zero quantization of [0, 1] to 0..255 (clamped).
inline std::uint8_t quantize_unit(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

template <Real T>
Field2D heatmap_channel(const FullHeatmap<T>& full, std::size_t label) {
  if (label >= full.map.num_labels()) {
    throw ArgumentError("label index " + std::to_string(label) + " out of range (num_labels = " +
                        std::to_string(full.map.num_labels()) + ")");
  }
  Field2D f{full.height(), full.width(), {}};
  auto plane = full.map.values.slice(label);
  f.values.assign(plane.begin(), plane.end());
  return f;
}

/// One heatmap channel, bicubic-upsampled and quantized to 8-bit gray.
template <Real T>
GrayImage render_heatmap(const FullHeatmap<T>& full, std::size_t label, std::size_t factor) {
  const Field2D up = bicubic_upsample(heatmap_channel(full, label), factor);
  GrayImage img{up.height, up.width, {}};
  img.pixels.reserve(up.values.size());
  for (double v : up.values) img.pixels.push_back(quantize_unit(v));
  return img;
}

template <Real T>
void export_heatmap(const std::filesystem::path& path, const FullHeatmap<T>& full, std::size_t label,
                    std::size_t factor) {
  write_pgm(path, render_heatmap(full, label, factor));
}

}  // namespace insight
