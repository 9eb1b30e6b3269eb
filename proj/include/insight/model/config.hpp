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

#include <cstddef>
#include <string>

#include <nlohmann/json.hpp>

#include "insight/common.hpp"

namespace insight {

enum class PoolingMode { kSmoothMax, kMax, kLp };

inline std::string to_string(PoolingMode m) {
  switch (m) {
    case PoolingMode::kSmoothMax: return "smoothmax";
    case PoolingMode::kMax: return "max";
    case PoolingMode::kLp: return "lp";
  }
  return "?";
}

inline PoolingMode parse_pooling_mode(const std::string& s) {
  if (s == "smoothmax") return PoolingMode::kSmoothMax;
  if (s == "max") return PoolingMode::kMax;
  if (s == "lp") return PoolingMode::kLp;
  throw ConfigError("unknown pooling mode '" + s + "' (expected smoothmax, max or lp)");
}

struct ModelConfig {
  std::size_t embed_dim = 1024;
  std::size_t proj_dim = 128;
  std::size_t hidden_dim = 64;
  std::size_t num_labels = 1;
  std::size_t detection_kernel = 1;
  std::size_t context_kernel = 3;
  double alpha = 8.0;
  std::size_t otsu_bins = 256;
  PoolingMode pooling_mode = PoolingMode::kSmoothMax;
  double lp_p = 4.0;
  bool context_enabled = true;
  bool threshold_enabled = true;

  void validate() const {
    if (embed_dim == 0 || proj_dim == 0 || hidden_dim == 0) throw ConfigError("channel counts must be positive");
    if (proj_dim > embed_dim) throw ConfigError("proj_dim must not exceed embed_dim");
    if (num_labels < 1) throw ConfigError("num_labels must be >= 1");
    if (detection_kernel % 2 == 0 || context_kernel % 2 == 0) throw ConfigError("kernel sizes must be odd");
    if (!(alpha > 0)) throw ConfigError("alpha must be > 0");
    if (otsu_bins < 2) throw ConfigError("otsu_bins must be >= 2");
    if (pooling_mode == PoolingMode::kLp && !(lp_p >= 2)) throw ConfigError("lp_p must be >= 2");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"embed_dim", c.embed_dim},
                     {"proj_dim", c.proj_dim},
                     {"hidden_dim", c.hidden_dim},
                     {"num_labels", c.num_labels},
                     {"detection_kernel", c.detection_kernel},
                     {"context_kernel", c.context_kernel},
                     {"alpha", c.alpha},
                     {"otsu_bins", c.otsu_bins},
                     {"pooling_mode", to_string(c.pooling_mode)},
                     {"lp_p", c.lp_p},
                     {"context_enabled", c.context_enabled},
                     {"threshold_enabled", c.threshold_enabled}};
}

// Missing keys keep their current value, so partial configs layer over defaults.
inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("embed_dim", c.embed_dim);
  get("proj_dim", c.proj_dim);
  get("hidden_dim", c.hidden_dim);
  get("num_labels", c.num_labels);
  get("detection_kernel", c.detection_kernel);
  get("context_kernel", c.context_kernel);
  get("alpha", c.alpha);
  get("otsu_bins", c.otsu_bins);
  if (j.contains("pooling_mode")) c.pooling_mode = parse_pooling_mode(j.at("pooling_mode").get<std::string>());
  get("lp_p", c.lp_p);
  get("context_enabled", c.context_enabled);
  get("threshold_enabled", c.threshold_enabled);
}

}  // namespace insight
