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

// Bag-level forward and backward passes:
//   project -> detection/context stacks -> fuse per patch -> stitch
//   -> per-label Otsu mask on the full map -> pool -> y_hat, z = logit(y_hat)
// The Otsu mask is a constant in the backward pass (straight-through).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "insight/data/bag.hpp"
#include "insight/model/config.hpp"
#include "insight/model/heatmap.hpp"
#include "insight/model/otsu.hpp"
#include "insight/model/params.hpp"
#include "insight/model/pooling.hpp"

namespace insight {

/// Probability clamp used for logits and the BCE objective.
inline constexpr double kProbabilityClamp = 1e-7;
/// Output clipping applied to LP pooling before it is used as a probability.
inline constexpr double kLpClip = 1e-6;

inline double logit(double p, double clamp = kProbabilityClamp) {
  const double q = std::clamp(p, clamp, 1.0 - clamp);
  return std::log(q / (1.0 - q));
}

template <Real T>
struct StackTrace {
  Tensor<T> input;
  std::array<Tensor<T>, 2> gelu_grad;  // gelu'(conv output)
  std::array<LayerNormCache<T>, 2> norm_cache;
  std::array<Tensor<T>, 2> normed;   // layer-norm outputs (next conv inputs)
};

template <Real T>
Tensor<T> stack_forward(const ConvStack<T>& stack, const Tensor<T>& x, StackTrace<T>* trace = nullptr) {
  Tensor<T> cur = x;
  if (trace) trace->input = x;
  for (std::size_t i = 0; i < 2; ++i) {
    Tensor<T> a = gelu(conv2d(cur, stack.conv[i]), trace ? &trace->gelu_grad[i] : nullptr);
    LayerNormCache<T> cache;
    Tensor<T> n = layer_norm(a, stack.norm[i].gain.value, stack.norm[i].shift.value, trace ? &cache : nullptr);
    if (trace) {
      trace->norm_cache[i] = std::move(cache);
      trace->normed[i] = n;
    }
    cur = std::move(n);
  }
  return conv2d(cur, stack.conv[2]);
}

/// Accumulates stack parameter gradients; returns dL/d(input).
template <Real T>
Tensor<T> stack_backward(ConvStack<T>& stack, const StackTrace<T>& trace, const Tensor<T>& grad_out) {
  Tensor<T> g;
  conv2d_backward(trace.normed[1], stack.conv[2], grad_out, &g);
  for (std::size_t i = 2; i-- > 0;) {
    g = layer_norm_backward(trace.norm_cache[i], stack.norm[i], g);
    g = gelu_backward_from_derivative(trace.gelu_grad[i], g);
    Tensor<T> gin;
    const Tensor<T>& in = i == 0 ? trace.input : trace.normed[0];
    conv2d_backward(in, stack.conv[i], g, &gin);
    g = std::move(gin);
  }
  return g;
}

/// Pure 1x1 projection of an embedding to proj_dim channels.
template <Real T>
Tensor<T> project(const Tensor<T>& embedding, const ModelParams<T>& params) {
  if (embedding.rank() != 3 || embedding.dim(0) != params.projection.in_channels()) {
    throw DimensionError("project: embedding channels do not match embed_dim");
  }
  return conv2d(embedding, params.projection);
}

template <Real T>
Heatmap<T> detection_forward(const Tensor<T>& projected, const ModelParams<T>& params,
                             StackTrace<T>* trace = nullptr) {
  return Heatmap<T>{stack_forward(params.detection, projected, trace)};
}

template <Real T>
Heatmap<T> context_forward(const Tensor<T>& projected, const ModelParams<T>& params,
                           StackTrace<T>* trace = nullptr) {
  return Heatmap<T>{stack_forward(params.context, projected, trace)};
}

template <Real T>
struct PatchTrace {
  std::size_t row = 0, col = 0;
  Tensor<T> embedding;
  Tensor<T> projected;
  StackTrace<T> det_trace, con_trace;
  Heatmap<T> det, con, fused;
};

/// Per-label pooling state kept for the backward pass.
template <Real T>
struct LabelTrace {
  OtsuResult otsu;
  bool mask_applied = false;
  std::vector<std::uint8_t> keep;   // per covered site, row-major over the full map
  std::vector<T> pooled_input;      // H' at covered sites
  double pooled_raw = 0;            // pooling output before clipping
  bool clipped = false;             // LP output clipped (zero gradient)
  std::size_t argmax = 0;           // max pooling only
};

template <Real T>
struct BagTrace {
  std::vector<PatchTrace<T>> patches;  // sorted by (row, col)
  std::vector<std::size_t> covered_sites;  // full-map site indices of covered entries
  std::vector<LabelTrace<T>> labels;
};

template <Real T>
struct BagPrediction {
  std::vector<double> y_hat;
  std::vector<double> z;
  FullHeatmap<T> fused;   // H on the stitched grid
  FullHeatmap<T> masked;  // H' on the stitched grid
};

template <Real T>
struct BagForward {
  BagPrediction<T> prediction;
  BagTrace<T> trace;
};

struct ForwardOptions {
  /// Replaces the Otsu-derived keep masks (one per label, over covered sites).
  /// Used by gradient oracles to evaluate the straight-through objective.
  const std::vector<std::vector<std::uint8_t>>* frozen_keep = nullptr;
};

template <Real T>
BagForward<T> forward_bag(const BagOfPatches& bag, const ModelParams<T>& params, const ModelConfig& cfg,
                          const ForwardOptions& opts = {}) {
  if (bag.patches.empty()) throw ArgumentError("forward_bag: bag has no patches");
  const auto& shape0 = bag.patches.front().embedding.shape();
  for (const auto& p : bag.patches) {
    if (p.embedding.shape() != shape0) throw DimensionError("forward_bag: patch embeddings differ in shape");
  }
  if (shape0[0] != cfg.embed_dim) throw DimensionError("forward_bag: embedding channels != embed_dim");

  std::vector<std::size_t> order(bag.patches.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = bag.patches[a];
    const auto& pb = bag.patches[b];
    return std::pair(pa.row, pa.col) < std::pair(pb.row, pb.col);
  });

  BagForward<T> out;
  auto& trace = out.trace;
  std::vector<PlacedHeatmap<T>> placed;
  placed.reserve(order.size());
  for (std::size_t idx : order) {
    const auto& patch = bag.patches[idx];
    PatchTrace<T> pt;
    pt.row = patch.row;
    pt.col = patch.col;
    pt.embedding = Tensor<T>::cast(patch.embedding);
    pt.projected = project(pt.embedding, params);
    pt.det = detection_forward(pt.projected, params, &pt.det_trace);
    if (cfg.context_enabled) {
      pt.con = context_forward(pt.projected, params, &pt.con_trace);
    } else {
      pt.con = Heatmap<T>{Tensor<T>::zeros_like(pt.det.values)};
    }
    pt.fused = fuse(pt.det, pt.con, cfg.context_enabled);
    placed.push_back({pt.fused, pt.row, pt.col});
    trace.patches.push_back(std::move(pt));
  }

  auto& pred = out.prediction;
  pred.fused = stitch(placed);
  pred.masked = pred.fused;
  const std::size_t C = pred.fused.map.num_labels();
  for (std::size_t s = 0; s < pred.fused.coverage.size(); ++s) {
    if (pred.fused.coverage[s]) trace.covered_sites.push_back(s);
  }
  if (opts.frozen_keep && opts.frozen_keep->size() != C) {
    throw DimensionError("forward_bag: frozen mask count != num_labels");
  }

  trace.labels.resize(C);
  pred.y_hat.resize(C);
  pred.z.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    auto& lt = trace.labels[c];
    const std::vector<T> values = pred.fused.covered_values(c);
    lt.keep.assign(values.size(), 1);
    if (opts.frozen_keep) {
      lt.keep = (*opts.frozen_keep)[c];
      if (lt.keep.size() != values.size()) throw DimensionError("forward_bag: frozen mask length mismatch");
      lt.mask_applied = true;
    } else if (cfg.threshold_enabled) {
      lt.otsu = otsu_threshold(std::span<const T>(values), cfg.otsu_bins);
      if (!lt.otsu.degenerate) {
        lt.mask_applied = true;
        for (std::size_t i = 0; i < values.size(); ++i) {
          lt.keep[i] = static_cast<double>(values[i]) > lt.otsu.threshold ? 1 : 0;
        }
      }
    }
    lt.pooled_input = values;
    auto plane = pred.masked.map.values.slice(c);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!lt.keep[i]) {
        lt.pooled_input[i] = T(0);
        plane[trace.covered_sites[i]] = T(0);
      }
    }

    const std::span<const T> h(lt.pooled_input);
    double y = 0;
    switch (cfg.pooling_mode) {
      case PoolingMode::kSmoothMax:
        y = smoothmax_pool(h, cfg.alpha);
        lt.pooled_raw = y;
        break;
      case PoolingMode::kMax:
        lt.argmax = argmax_index(h);
        y = static_cast<double>(h[lt.argmax]);
        lt.pooled_raw = y;
        break;
      case PoolingMode::kLp:
        lt.pooled_raw = lp_pool(h, cfg.lp_p);
        y = std::clamp(lt.pooled_raw, kLpClip, 1.0 - kLpClip);
        lt.clipped = y != lt.pooled_raw;
        break;
    }
    if (!std::isfinite(y)) throw NumericalError("forward_bag: non-finite pooled score for label " + std::to_string(c));
    pred.y_hat[c] = y;
    pred.z[c] = logit(y);
  }
  return out;
}

/// Backpropagates dL/dy_hat through the recorded forward pass, accumulating
/// into every parameter gradient. When `projected_grads` is non-null it
/// receives dL/d(projected features) per patch, in trace order.
template <Real T>
void backward_bag(const BagTrace<T>& trace, ModelParams<T>& params, const ModelConfig& cfg,
                  std::span<const double> grad_y_hat, std::vector<Tensor<T>>* projected_grads = nullptr) {
  const std::size_t C = trace.labels.size();
  if (grad_y_hat.size() != C) throw DimensionError("backward_bag: gradient length != num_labels");
  if (trace.patches.empty()) return;
  const std::size_t ph = trace.patches.front().fused.height(), pw = trace.patches.front().fused.width();
  std::size_t rows = 0, cols = 0;
  for (const auto& p : trace.patches) {
    rows = std::max(rows, p.row + 1);
    cols = std::max(cols, p.col + 1);
  }
  const std::size_t W = cols * pw;

  // dL/dH on the full grid.
  Tensor<T> gfull({C, rows * ph, W});
  for (std::size_t c = 0; c < C; ++c) {
    const auto& lt = trace.labels[c];
    const double gy = grad_y_hat[c];
    if (gy == 0 || lt.clipped) continue;
    const std::span<const T> h(lt.pooled_input);
    std::vector<double> dpool;
    switch (cfg.pooling_mode) {
      case PoolingMode::kSmoothMax: dpool = smoothmax_pool_grad(h, cfg.alpha); break;
      case PoolingMode::kMax:
        dpool.assign(h.size(), 0.0);
        dpool[lt.argmax] = 1.0;
        break;
      case PoolingMode::kLp: dpool = lp_pool_grad(h, cfg.lp_p); break;
    }
    auto plane = gfull.slice(c);
    for (std::size_t i = 0; i < dpool.size(); ++i) {
      if (lt.keep[i]) plane[trace.covered_sites[i]] = static_cast<T>(gy * dpool[i]);
    }
  }

  if (projected_grads) projected_grads->clear();
  for (const auto& pt : trace.patches) {
    Tensor<T> g({C, ph, pw});
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t y = 0; y < ph; ++y) {
        for (std::size_t x = 0; x < pw; ++x) g.at(c, y, x) = gfull.at(c, pt.row * ph + y, pt.col * pw + x);
      }
    }
    auto [gdet, gcon] = fuse_backward(pt.det, pt.con, pt.fused, g, cfg.context_enabled);
    Tensor<T> gproj = stack_backward(params.detection, pt.det_trace, gdet);
    if (cfg.context_enabled) gproj += stack_backward(params.context, pt.con_trace, gcon);
    conv2d_backward(pt.embedding, params.projection, gproj, nullptr);
    if (projected_grads) projected_grads->push_back(std::move(gproj));
  }
}

}  // namespace insight
