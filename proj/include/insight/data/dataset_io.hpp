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

// Dataset directory layout:
//   manifest.json            split membership, bag paths, labels, mask paths
//   bags/<bag_id>.ieb        IEB1 bag files (with embedded masks)
//   masks/<bag_id>_c<k>.pgm  per-label ground-truth masks (P5, 0/255)

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "insight/data/bag_io.hpp"
#include "insight/data/pgm.hpp"
#include "insight/data/synth.hpp"

namespace insight {

inline constexpr const char* kManifestFormat = "insight-dataset";
inline constexpr int kManifestVersion = 1;

struct LoadedDataset {
  std::map<std::string, std::vector<BagOfPatches>> splits;
  std::size_t num_labels = 0;
  std::optional<StrataBounds> strata_bounds;
  nlohmann::json manifest;

  const std::vector<BagOfPatches>& split(const std::string& name) const {
    auto it = splits.find(name);
    if (it == splits.end()) throw ArgumentError("dataset has no split '" + name + "'");
    return it->second;
  }
};

inline nlohmann::json build_manifest(const std::map<std::string, const std::vector<BagOfPatches>*>& splits,
                                     std::size_t num_labels, const std::optional<StrataBounds>& bounds,
                                     const std::optional<SynthConfig>& synth) {
  nlohmann::json m;
  m["format"] = kManifestFormat;
  m["version"] = kManifestVersion;
  m["num_labels"] = num_labels;
  if (bounds) m["strata_bounds"] = {{"small_max", bounds->small_max}, {"moderate_max", bounds->moderate_max}};
  if (synth) m["synth_config"] = *synth;
  nlohmann::json js = nlohmann::json::object();
  for (const auto& [name, bags] : splits) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : *bags) {
      nlohmann::json entry = {{"bag_id", b.bag_id}, {"path", "bags/" + b.bag_id + ".ieb"}, {"labels", b.labels}};
      if (b.has_masks()) {
        nlohmann::json masks = nlohmann::json::array();
        for (std::size_t c = 0; c < b.masks.size(); ++c) masks.push_back("masks/" + b.bag_id + "_c" + std::to_string(c) + ".pgm");
        entry["masks"] = masks;
      }
      arr.push_back(std::move(entry));
    }
    js[name] = std::move(arr);
  }
  m["splits"] = std::move(js);
  return m;
}

/// Writes bags, masks and manifest under `dir`.
inline void write_dataset(const std::filesystem::path& dir, const Dataset& ds, const SynthConfig& cfg) {
  std::map<std::string, const std::vector<BagOfPatches>*> splits = {
      {"train", &ds.train}, {"val", &ds.val}, {"test", &ds.test}};
  for (const auto& [name, bags] : splits) {
    for (const auto& b : *bags) {
      write_bag(dir / "bags" / (b.bag_id + ".ieb"), b);
      for (std::size_t c = 0; c < b.masks.size(); ++c) {
        write_mask(dir / "masks" / (b.bag_id + "_c" + std::to_string(c) + ".pgm"), b.masks[c]);
      }
    }
  }
  const auto manifest = build_manifest(splits, cfg.num_labels, cfg.strata_bounds(), cfg);
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline LoadedDataset read_dataset(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  try {
    if (m.at("format") != kManifestFormat) throw FormatError(path.string() + ": not an insight dataset manifest");
    if (m.at("version") != kManifestVersion) throw FormatError(path.string() + ": unsupported manifest version");
    LoadedDataset out;
    out.num_labels = m.at("num_labels").get<std::size_t>();
    if (m.contains("strata_bounds")) {
      out.strata_bounds = StrataBounds{m["strata_bounds"].at("small_max").get<double>(),
                                       m["strata_bounds"].at("moderate_max").get<double>()};
    }
    for (const auto& [name, entries] : m.at("splits").items()) {
      auto& bags = out.splits[name];
      for (const auto& e : entries) {
        BagOfPatches b = read_bag(dir / e.at("path").get<std::string>());
        if (b.bag_id != e.at("bag_id").get<std::string>()) throw FormatError(path.string() + ": bag id mismatch for " + b.bag_id);
        if (b.labels != e.at("labels").get<std::vector<std::uint8_t>>()) {
          throw FormatError(path.string() + ": label mismatch for bag " + b.bag_id);
        }
        if (b.num_labels() != out.num_labels) throw FormatError(path.string() + ": label count mismatch for bag " + b.bag_id);
        if (!b.has_masks() && e.contains("masks")) {
          for (const auto& mp : e.at("masks")) b.masks.push_back(read_mask(dir / mp.get<std::string>()));
          b.validate();
        }
        bags.push_back(std::move(b));
      }
    }
    out.manifest = std::move(m);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace insight
