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

// Synthetic weak-supervision benchmark: noise embeddings with planted
// elliptical lesions that shift a fixed subset of channels per label. Only
// the bag labels say whether a lesion exists; masks record where.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "insight/data/bag.hpp"
#include "insight/eval/metrics.hpp"
#include "insight/eval/stratify.hpp"

namespace insight {

struct AreaBin {
  double lo = 0;  // fraction of stitched map area
  double hi = 0;
  friend bool operator==(const AreaBin&, const AreaBin&) = default;
};

struct SynthConfig {
  std::size_t num_train = 96;
  std::size_t num_val = 32;
  std::size_t num_test = 48;
  std::size_t grid_rows = 8;
  std::size_t grid_cols = 8;
  std::size_t patch_h = 7;
  std::size_t patch_w = 7;
  std::size_t embed_dim = 16;
  std::size_t num_labels = 1;
  double positive_fraction = 0.5;
  // small / moderate / large lesion areas as fractions of the stitched map.
  std::array<AreaBin, 3> lesion_area_fractions = {AreaBin{0.004, 0.01}, AreaBin{0.015, 0.035}, AreaBin{0.05, 0.09}};
  std::size_t max_lesions_per_label = 2;
  std::size_t signal_channels = 4;
  double signal_strength = 1.5;
  double noise_std = 1.0;
  std::uint64_t seed = 0;

  std::size_t map_height() const { return grid_rows * patch_h; }
  std::size_t map_width() const { return grid_cols * patch_w; }
  double map_area() const { return static_cast<double>(map_height() * map_width()); }

  void validate() const {
    if (grid_rows == 0 || grid_cols == 0 || patch_h == 0 || patch_w == 0) throw ConfigError("grid and patch extents must be positive");
    if (embed_dim == 0 || num_labels == 0) throw ConfigError("embed_dim and num_labels must be positive");
    if (signal_channels == 0 || signal_channels > embed_dim) throw ConfigError("signal_channels must be in [1, embed_dim]");
    if (!(positive_fraction > 0 && positive_fraction < 1)) throw ConfigError("positive_fraction must be in (0, 1)");
    if (!(signal_strength >= 0)) throw ConfigError("signal_strength must be >= 0");
    if (!(noise_std >= 0)) throw ConfigError("noise_std must be >= 0");
    if (max_lesions_per_label == 0) throw ConfigError("max_lesions_per_label must be >= 1");
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& b = lesion_area_fractions[i];
      if (!(b.lo > 0 && b.hi < 1 && b.lo <= b.hi)) throw ConfigError("lesion area fractions must satisfy 0 < lo <= hi < 1");
      if (i > 0 && !(lesion_area_fractions[i - 1].hi < b.lo)) throw ConfigError("lesion area bins must be increasing and disjoint");
      // Largest ellipse at the most elongated aspect must fit inside the map.
      const double area = b.hi * map_area();
      const double major = 2.0 * std::sqrt(area * kMaxAspect / std::numbers::pi);
      if (major > static_cast<double>(std::min(map_height(), map_width()))) {
        throw ConfigError("lesion area bin " + std::to_string(i) + " does not fit inside the " +
                          std::to_string(map_height()) + "x" + std::to_string(map_width()) + " grid");
      }
    }
  }

  /// Pixel-area strata separating the three lesion bins at their midpoints.
  StrataBounds strata_bounds() const {
    const auto& b = lesion_area_fractions;
    return {0.5 * (b[0].hi + b[1].lo) * map_area(), 0.5 * (b[1].hi + b[2].lo) * map_area()};
  }

  static constexpr double kMinAspect = 0.6;
  static constexpr double kMaxAspect = 1.6;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

inline void to_json(nlohmann::json& j, const SynthConfig& c) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : c.lesion_area_fractions) bins.push_back({b.lo, b.hi});
  j = {{"num_train", c.num_train},
       {"num_val", c.num_val},
       {"num_test", c.num_test},
       {"grid_rows", c.grid_rows},
       {"grid_cols", c.grid_cols},
       {"patch_h", c.patch_h},
       {"patch_w", c.patch_w},
       {"embed_dim", c.embed_dim},
       {"num_labels", c.num_labels},
       {"positive_fraction", c.positive_fraction},
       {"lesion_area_fractions", bins},
       {"max_lesions_per_label", c.max_lesions_per_label},
       {"signal_channels", c.signal_channels},
       {"signal_strength", c.signal_strength},
       {"noise_std", c.noise_std},
       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, SynthConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("num_train", c.num_train);
  get("num_val", c.num_val);
  get("num_test", c.num_test);
  get("grid_rows", c.grid_rows);
  get("grid_cols", c.grid_cols);
  get("patch_h", c.patch_h);
  get("patch_w", c.patch_w);
  get("embed_dim", c.embed_dim);
  get("num_labels", c.num_labels);
  get("positive_fraction", c.positive_fraction);
  if (j.contains("lesion_area_fractions")) {
    const auto& bins = j.at("lesion_area_fractions");
    if (!bins.is_array() || bins.size() != 3) throw ConfigError("lesion_area_fractions must list 3 [lo, hi] pairs");
    for (std::size_t i = 0; i < 3; ++i) {
      c.lesion_area_fractions[i] = {bins[i].at(0).get<double>(), bins[i].at(1).get<double>()};
    }
  }
  get("max_lesions_per_label", c.max_lesions_per_label);
  get("signal_channels", c.signal_channels);
  get("signal_strength", c.signal_strength);
  get("noise_std", c.noise_std);
  get("seed", c.seed);
}

/// Preset with the 14x14 per-tile spatial shape of typical ViT-L encoders.
inline SynthConfig synth_preset_vit_shape() {
  SynthConfig c;
  c.grid_rows = 4;
  c.grid_cols = 4;
  c.patch_h = 14;
  c.patch_w = 14;
  return c;
}

struct PlantedLesion {
  std::size_t label = 0;
  std::size_t bin = 0;
  std::size_t area = 0;

  friend bool operator==(const PlantedLesion&, const PlantedLesion&) = default;
};

struct Dataset {
  std::vector<BagOfPatches> train, val, test;
  std::vector<std::vector<std::size_t>> signal_channels;  // per label
  std::vector<PlantedLesion> lesions;                      // every planted lesion, in generation order

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

namespace detail {

inline std::mt19937_64 bag_rng(std::uint64_t seed, std::uint64_t split, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(split), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

inline BinaryMask rasterize_ellipse(std::size_t H, std::size_t W, double cy, double cx, double ry, double rx) {
  BinaryMask m(H, W);
  for (std::size_t y = 0; y < H; ++y) {
    const double dy = (static_cast<double>(y) + 0.5 - cy) / ry;
    for (std::size_t x = 0; x < W; ++x) {
      const double dx = (static_cast<double>(x) + 0.5 - cx) / rx;
      if (dy * dy + dx * dx <= 1.0) m.at(y, x) = 1;
    }
  }
  return m;
}

/// True when `a` overlaps `b` or touches it in the 8-neighborhood.
inline bool touches(const BinaryMask& a, const BinaryMask& b) {
  for (std::size_t y = 0; y < a.height; ++y) {
    for (std::size_t x = 0; x < a.width; ++x) {
      if (!a.at(y, x)) continue;
      for (std::size_t yy = y ? y - 1 : 0; yy <= std::min(a.height - 1, y + 1); ++yy) {
        for (std::size_t xx = x ? x - 1 : 0; xx <= std::min(a.width - 1, x + 1); ++xx) {
          if (b.at(yy, xx)) return true;
        }
      }
    }
  }
  return false;
}

inline constexpr int kLesionAttempts = 500;

/// Plants one lesion for `label` into `mask`; returns its pixel area.
inline std::size_t plant_lesion(const SynthConfig& cfg, std::size_t bin, BinaryMask& mask, std::mt19937_64& rng) {
  const std::size_t H = cfg.map_height(), W = cfg.map_width();
  const double A = cfg.map_area();
  const auto& range = cfg.lesion_area_fractions[bin];
  const double lo = range.lo * A, hi = range.hi * A;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < kLesionAttempts; ++attempt) {
    const double area = lo + (hi - lo) * unit(rng);
    const double aspect = SynthConfig::kMinAspect + (SynthConfig::kMaxAspect - SynthConfig::kMinAspect) * unit(rng);
    const double rx = std::sqrt(area / (std::numbers::pi * aspect));
    const double ry = rx * aspect;
    if (2 * ry > static_cast<double>(H) || 2 * rx > static_cast<double>(W)) continue;
    const double cy = ry + (static_cast<double>(H) - 2 * ry) * unit(rng);
    const double cx = rx + (static_cast<double>(W) - 2 * rx) * unit(rng);
    BinaryMask lesion = rasterize_ellipse(H, W, cy, cx, ry, rx);
    const std::size_t px = lesion.count();
    if (static_cast<double>(px) < lo || static_cast<double>(px) > hi) continue;
    if (connected_components(lesion).components.size() != 1) continue;
    if (touches(lesion, mask)) continue;
    for (std::size_t i = 0; i < mask.data.size(); ++i) mask.data[i] |= lesion.data[i];
    return px;
  }
  throw ConfigError("could not place a lesion of area bin " + std::to_string(bin) + " after " +
                    std::to_string(kLesionAttempts) + " attempts");
}

inline BagOfPatches make_bag(const SynthConfig& cfg, const std::string& id, const std::vector<std::uint8_t>& labels,
                             const std::vector<std::vector<std::size_t>>& channels, std::mt19937_64& rng,
                             std::vector<PlantedLesion>& planted) {
  const std::size_t H = cfg.map_height(), W = cfg.map_width(), C = cfg.num_labels;
  BagOfPatches bag;
  bag.bag_id = id;
  bag.labels = labels;
  bag.masks.assign(C, BinaryMask(H, W));
  std::uniform_int_distribution<std::size_t> nles(1, cfg.max_lesions_per_label);
  std::uniform_int_distribution<std::size_t> pick_bin(0, 2);
  for (std::size_t c = 0; c < C; ++c) {
    if (!labels[c]) continue;
    const std::size_t n = nles(rng);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t bin = pick_bin(rng);
      const std::size_t area = plant_lesion(cfg, bin, bag.masks[c], rng);
      planted.push_back({c, bin, area});
    }
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t ph = cfg.patch_h, pw = cfg.patch_w, D = cfg.embed_dim;
  for (std::size_t r = 0; r < cfg.grid_rows; ++r) {
    for (std::size_t col = 0; col < cfg.grid_cols; ++col) {
      Patch p;
      p.row = static_cast<std::uint32_t>(r);
      p.col = static_cast<std::uint32_t>(col);
      p.embedding = Tensor<float>({D, ph, pw});
      for (auto& v : p.embedding.data()) v = static_cast<float>(cfg.noise_std * noise(rng));
      for (std::size_t c = 0; c < C; ++c) {
        if (!labels[c]) continue;
        for (std::size_t y = 0; y < ph; ++y) {
          for (std::size_t x = 0; x < pw; ++x) {
            if (!bag.masks[c].at(r * ph + y, col * pw + x)) continue;
            for (std::size_t ch : channels[c]) p.embedding.at(ch, y, x) += static_cast<float>(cfg.signal_strength);
          }
        }
      }
      bag.patches.push_back(std::move(p));
    }
  }
  return bag;
}

}  // namespace detail

/// Deterministic in `cfg.seed`. Each split holds round(n * positive_fraction)
/// positives per label (at least one positive and one negative when n >= 2).
inline Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Dataset ds;
  std::mt19937_64 rng(cfg.seed);

  // Per-label signal channels: disjoint while the embedding is wide enough.
  std::vector<std::size_t> perm(cfg.embed_dim);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t c = 0; c < cfg.num_labels; ++c) {
    std::vector<std::size_t> ch;
    for (std::size_t k = 0; k < cfg.signal_channels; ++k) ch.push_back(perm[(c * cfg.signal_channels + k) % cfg.embed_dim]);
    std::sort(ch.begin(), ch.end());
    ds.signal_channels.push_back(std::move(ch));
  }

  const std::array<std::pair<const char*, std::size_t>, 3> splits = {
      std::pair{"train", cfg.num_train}, std::pair{"val", cfg.num_val}, std::pair{"test", cfg.num_test}};
  std::array<std::vector<BagOfPatches>*, 3> outs = {&ds.train, &ds.val, &ds.test};
  for (std::size_t s = 0; s < 3; ++s) {
    const std::size_t n = splits[s].second;
    // Label matrix: per label a random subset of bags is positive.
    std::vector<std::vector<std::uint8_t>> labels(n, std::vector<std::uint8_t>(cfg.num_labels, 0));
    for (std::size_t c = 0; c < cfg.num_labels; ++c) {
      auto npos = static_cast<std::size_t>(std::lround(cfg.positive_fraction * static_cast<double>(n)));
      if (n >= 2) npos = std::clamp<std::size_t>(npos, 1, n - 1);
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::shuffle(idx.begin(), idx.end(), rng);
      for (std::size_t k = 0; k < npos && k < n; ++k) labels[idx[k]][c] = 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "%s_%04zu", splits[s].first, i);
      auto brng = detail::bag_rng(cfg.seed, s, i);
      outs[s]->push_back(detail::make_bag(cfg, id, labels[i], ds.signal_channels, brng, ds.lesions));
    }
  }
  return ds;
}

}  // namespace insight
