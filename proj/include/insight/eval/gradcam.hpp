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

// Post-hoc gradient-weighted saliency on the projected feature map, used as a
// baseline against the model's built-in heatmaps.

#include <algorithm>
#include <vector>

#include "insight/model/forward.hpp"

namespace insight {

template <Real T>
struct SaliencyResult {
  FullHeatmap<T> saliency;          // one channel per label, values in [0, 1]
  std::vector<bool> degenerate;     // constant saliency, emitted as zeros
};

template <Real T>
SaliencyResult<T> grad_cam_saliency(const BagOfPatches& bag, const ModelParams<T>& params, const ModelConfig& cfg) {
  ModelParams<T> scratch = params;  // backward accumulates into gradient buffers
  const auto fwd = forward_bag(bag, scratch, cfg);
  const auto& trace = fwd.trace;
  const std::size_t C = cfg.num_labels;
  const std::size_t K = trace.patches.front().projected.dim(0);
  const std::size_t ph = trace.patches.front().projected.dim(1), pw = trace.patches.front().projected.dim(2);

  SaliencyResult<T> out;
  std::vector<std::vector<T>> per_label(C);
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<double> seed(C, 0.0);
    seed[c] = 1.0;
    std::vector<Tensor<T>> grads;
    backward_bag(trace, scratch, cfg, seed, &grads);

    // Channel weights: mean gradient over every covered site of the bag.
    std::vector<double> weight(K, 0.0);
    for (const auto& g : grads) {
      for (std::size_t k = 0; k < K; ++k) {
        for (T v : g.slice(k)) weight[k] += static_cast<double>(v);
      }
    }
    const double sites = static_cast<double>(grads.size() * ph * pw);
    for (auto& w : weight) w /= sites;

    std::vector<T>& values = per_label[c];
    values.reserve(trace.patches.size() * ph * pw);
    for (const auto& pt : trace.patches) {
      for (std::size_t s = 0; s < ph * pw; ++s) {
        double acc = 0;
        for (std::size_t k = 0; k < K; ++k) acc += weight[k] * static_cast<double>(pt.projected.slice(k)[s]);
        values.push_back(static_cast<T>(std::max(0.0, acc)));
      }
    }
  }

  std::vector<PlacedHeatmap<T>> placed;
  for (std::size_t p = 0; p < trace.patches.size(); ++p) {
    Tensor<T> map({C, ph, pw});
    for (std::size_t c = 0; c < C; ++c) {
      std::copy_n(per_label[c].begin() + static_cast<std::ptrdiff_t>(p * ph * pw), ph * pw, map.slice(c).begin());
    }
    placed.push_back({Heatmap<T>{std::move(map)}, trace.patches[p].row, trace.patches[p].col});
  }
  out.saliency = stitch(placed);

  // Min-max normalization per label over covered sites.
  out.degenerate.assign(C, false);
  for (std::size_t c = 0; c < C; ++c) {
    auto plane = out.saliency.map.values.slice(c);
    double lo = 0, hi = 0;
    bool first = true;
    for (std::size_t i = 0; i < plane.size(); ++i) {
      if (!out.saliency.coverage[i]) continue;
      const double v = static_cast<double>(plane[i]);
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
    const double range = hi - lo;
    if (!(range > 1e-12)) {
      out.degenerate[c] = true;
      std::fill(plane.begin(), plane.end(), T(0));
      continue;
    }
    for (std::size_t i = 0; i < plane.size(); ++i) {
      plane[i] = out.saliency.coverage[i] ? static_cast<T>((static_cast<double>(plane[i]) - lo) / range) : T(0);
    }
  }
  return out;
}

}  // namespace insight
