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

// Shared fixtures and independent reference implementations for the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "insight/insight.hpp"

namespace insight::testing {

inline Tensor<double> random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double lo = -1,
                                    double hi = 1) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.data()) v = d(rng);
  return t;
}

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double lo = 0, double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline ModelConfig tiny_config(std::size_t num_labels = 2, PoolingMode mode = PoolingMode::kSmoothMax) {
  ModelConfig c;
  c.embed_dim = 3;
  c.proj_dim = 2;
  c.hidden_dim = 3;
  c.num_labels = num_labels;
  c.pooling_mode = mode;
  return c;
}

/// A bag with patches on the given (row, col) coordinates and uniform random
/// embeddings.
inline BagOfPatches random_bag(const ModelConfig& cfg, std::size_t ph, std::size_t pw,
                               const std::vector<std::pair<std::uint32_t, std::uint32_t>>& coords,
                               std::mt19937_64& rng, const std::string& id = "bag") {
  BagOfPatches bag;
  bag.bag_id = id;
  std::uniform_real_distribution<float> d(-1.5f, 1.5f);
  for (auto [r, c] : coords) {
    Patch p;
    p.row = r;
    p.col = c;
    p.embedding = Tensor<float>({cfg.embed_dim, ph, pw});
    for (auto& v : p.embedding.data()) v = d(rng);
    bag.patches.push_back(std::move(p));
  }
  bag.labels.assign(cfg.num_labels, 0);
  for (auto& l : bag.labels) l = static_cast<std::uint8_t>(rng() & 1);
  return bag;
}

/// Parameters with every entry (gains and biases included) drawn at random,
/// so no gradient path is trivially zero.
inline ModelParams<double> random_params(const ModelConfig& cfg, std::mt19937_64& rng, double scale = 0.8) {
  ModelParams<double> p(cfg);
  std::uniform_real_distribution<double> d(-scale, scale);
  p.visit([&](const std::string& name, GradPair<double>& g) {
    for (auto& v : g.value.data()) v = name.ends_with(".gain") ? 1.0 + d(rng) * 0.5 : d(rng);
  });
  return p;
}

inline std::vector<double> flatten_values(const ModelParams<double>& p) {
  std::vector<double> out;
  p.visit([&](const std::string&, const GradPair<double>& g) { out.insert(out.end(), g.value.data().begin(), g.value.data().end()); });
  return out;
}

inline std::vector<double> flatten_grads(const ModelParams<double>& p) {
  std::vector<double> out;
  p.visit([&](const std::string&, const GradPair<double>& g) { out.insert(out.end(), g.grad.data().begin(), g.grad.data().end()); });
  return out;
}

inline void assign_values(ModelParams<double>& p, std::span<const double> flat) {
  std::size_t off = 0;
  p.visit([&](const std::string&, GradPair<double>& g) {
    for (auto& v : g.value.data()) v = flat[off++];
  });
}

inline std::vector<double> bag_targets(const BagOfPatches& bag) { return {bag.labels.begin(), bag.labels.end()}; }

/// Finite-difference check of the full bag loss with respect to every
/// parameter. Otsu keep masks are frozen at their values for the unperturbed
/// parameters, which is the straight-through objective the backward pass
/// differentiates.
inline GradCheckResult check_bag_loss_gradient(const BagOfPatches& bag, ModelParams<double> params,
                                               const ModelConfig& cfg, const LossConfig& loss, double eps = 1e-5) {
  const auto targets = bag_targets(bag);
  const auto fwd = forward_bag(bag, params, cfg);
  std::vector<std::vector<std::uint8_t>> keep;
  for (const auto& lt : fwd.trace.labels) keep.push_back(lt.keep);
  ForwardOptions opts;
  opts.frozen_keep = &keep;

  const auto lg = total_loss_and_grad(fwd.prediction.y_hat, targets, loss);
  params.zero_grad();
  backward_bag(fwd.trace, params, cfg, lg.grad_y_hat);
  const auto analytic = flatten_grads(params);

  const auto x0 = flatten_values(params);
  Tensor<double> x({x0.size()}, x0);
  ModelParams<double> probe = params;
  auto f = [&](const Tensor<double>& v) {
    assign_values(probe, v.data());
    const auto out = forward_bag(bag, probe, cfg, opts);
    return total_loss_and_grad(out.prediction.y_hat, targets, loss).loss;
  };
  const auto numeric = finite_difference_gradient(f, x, eps);
  return compare_gradients(analytic, numeric.data());
}

// ------------------------------------------------------------------ oracles

/// Within-class variance of a split computed directly from class members.
inline double brute_within_variance(const std::vector<double>& v, double lo, std::size_t k, std::size_t bins,
                                    double hi) {
  std::vector<double> a, b;
  for (double x : v) (otsu_bin(x, lo, hi, bins) < k ? a : b).push_back(x);
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  auto var = [](const std::vector<double>& s) {
    const double m = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    double acc = 0;
    for (double x : s) acc += (x - m) * (x - m);
    return acc;
  };
  return (var(a) + var(b)) / static_cast<double>(v.size());
}

struct BruteOtsu {
  double threshold = 0;
  double within = 0;
};

/// Tries every boundary independently with a two-pass variance.
inline BruteOtsu brute_otsu(const std::vector<double>& v, std::size_t bins = 256) {
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  BruteOtsu best{*mn, std::numeric_limits<double>::infinity()};
  for (std::size_t k = 1; k < bins; ++k) {
    const double w = brute_within_variance(v, *mn, k, bins, *mx);
    if (w < best.within) best = {otsu_boundary(*mn, *mx, bins, k), w};
  }
  return best;
}

/// Tries every distinct value as a cut "x > t" and returns the best
/// within-class variance.
inline double brute_value_cut_within(const std::vector<double>& v) {
  std::vector<double> cuts(v);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    std::vector<double> a, b;
    for (double x : v) (x > cuts[i] ? b : a).push_back(x);
    auto var = [](const std::vector<double>& s) {
      const double m = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
      double acc = 0;
      for (double x : s) acc += (x - m) * (x - m);
      return acc;
    };
    best = std::min(best, (var(a) + var(b)) / static_cast<double>(v.size()));
  }
  return best;
}

inline double brute_dice(const std::vector<std::uint8_t>& p, const std::vector<std::uint8_t>& g) {
  double inter = 0, sp = 0, sg = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += (p[i] && g[i]);
    sp += p[i] != 0;
    sg += g[i] != 0;
  }
  return sp + sg == 0 ? 1.0 : 2 * inter / (sp + sg);
}

/// Probability that a random positive outranks a random negative, ties 1/2.
inline double brute_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
    }
  }
  return wins / pairs;
}

/// Union-find labeling with 4-neighbours; returns a canonical labeling where
/// components are numbered 1.. in order of their first pixel.
inline std::vector<int> brute_components(const BinaryMask& m) {
  const std::size_t n = m.data.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  for (std::size_t y = 0; y < m.height; ++y) {
    for (std::size_t x = 0; x < m.width; ++x) {
      const std::size_t i = y * m.width + x;
      if (!m.data[i]) continue;
      if (x + 1 < m.width && m.data[i + 1]) parent[find(i)] = find(i + 1);
      if (y + 1 < m.height && m.data[i + m.width]) parent[find(i)] = find(i + m.width);
    }
  }
  std::vector<int> label(n, 0);
  std::vector<int> root_label(n, 0);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!m.data[i]) continue;
    const std::size_t r = find(i);
    if (!root_label[r]) root_label[r] = ++next;
    label[i] = root_label[r];
  }
  return label;
}

/// Renumbers a labeling so components appear in order of first pixel.
inline std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::vector<int> out(labels.size(), 0);
  std::vector<std::pair<int, int>> map;
  int next = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    auto it = std::find_if(map.begin(), map.end(), [&](auto& p) { return p.first == labels[i]; });
    if (it == map.end()) {
      map.emplace_back(labels[i], ++next);
      out[i] = next;
    } else {
      out[i] = it->second;
    }
  }
  return out;
}

/// Exact sign-flip p-value: fraction of all 2^n sign patterns whose mean is
/// at least the observed mean.
inline double exact_permutation_p(const std::vector<double>& d) {
  const std::size_t n = d.size();
  const double observed = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double scale = 0;
  for (double x : d) scale = std::max(scale, std::abs(x));
  const double tol = 1e-12 * std::max(1.0, scale);
  std::size_t hits = 0;
  const std::size_t total = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < total; ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += (mask >> i & 1) ? -d[i] : d[i];
    if (s / static_cast<double>(n) >= observed - tol) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

inline BinaryMask mask_from_bits(std::size_t h, std::size_t w, std::uint64_t bits) {
  BinaryMask m(h, w);
  for (std::size_t i = 0; i < h * w; ++i) m.data[i] = (bits >> i) & 1;
  return m;
}

}  // namespace insight::testing
