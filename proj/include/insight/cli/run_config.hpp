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

// Run configuration: built-in defaults < JSON config file < command-line flags.

#include <algorithm>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "insight/data/synth.hpp"
#include "insight/eval/evaluate.hpp"
#include "insight/model/config.hpp"
#include "insight/train/adamw.hpp"
#include "insight/train/loss.hpp"
#include "insight/util/file_io.hpp"

namespace insight {

struct EvalSettings {
  std::string binarization = "otsu";  // otsu | fixed
  double threshold = 0.5;
  std::size_t permutation_iterations = 10000;
  std::uint64_t seed = 0;

  Binarization method() const {
    if (binarization == "otsu") return Binarization::otsu();
    if (binarization == "fixed") return Binarization::fixed(threshold);
    throw ConfigError("unknown binarization '" + binarization + "' (expected otsu or fixed)");
  }
  friend bool operator==(const EvalSettings&, const EvalSettings&) = default;
};

inline void to_json(nlohmann::json& j, const EvalSettings& e) {
  j = {{"binarization", e.binarization},
       {"threshold", e.threshold},
       {"permutation_iterations", e.permutation_iterations},
       {"seed", e.seed}};
}

inline void from_json(const nlohmann::json& j, EvalSettings& e) {
  if (j.contains("binarization")) j.at("binarization").get_to(e.binarization);
  if (j.contains("threshold")) j.at("threshold").get_to(e.threshold);
  if (j.contains("permutation_iterations")) j.at("permutation_iterations").get_to(e.permutation_iterations);
  if (j.contains("seed")) j.at("seed").get_to(e.seed);
}

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  LossConfig loss;
  SynthConfig synth;
  EvalSettings eval;
  // Regularizer switch: when false, spectral decoupling and label smoothing
  // are both disabled regardless of the loss settings.
  bool regularizer = true;
  std::size_t jobs = 1;

  /// Loss settings after applying the regularizer switch.
  LossConfig effective_loss() const {
    LossConfig l = loss;
    if (!regularizer) {
      l.lambda_sd = 0;
      l.label_smoothing = 0;
    }
    return l;
  }

  void validate() const {
    model.validate();
    train.validate();
    loss.validate();
    synth.validate();
    (void)eval.method();
    if (model.embed_dim != synth.embed_dim) throw ConfigError("model.embed_dim must equal synth.embed_dim");
    if (model.num_labels != synth.num_labels) throw ConfigError("model.num_labels must equal synth.num_labels");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Desk-scale defaults: 8x8 grid of 7x7 patches with 16-channel embeddings.
inline RunConfig default_run_config() {
  RunConfig c;
  c.model.embed_dim = 16;
  c.model.proj_dim = 8;
  c.model.hidden_dim = 8;
  c.model.num_labels = 1;
  c.train.learning_rate = 1e-3;
  c.train.max_epochs = 30;
  c.train.seed = 0;
  c.synth = SynthConfig{};
  return c;
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"model", c.model},       {"train", c.train},           {"loss", c.loss},
       {"synth", c.synth},       {"eval", c.eval},             {"regularizer", c.regularizer},
       {"jobs", c.jobs}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  static const char* known[] = {"model", "train", "loss", "synth", "eval", "regularizer", "jobs"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw ConfigError("unknown config section '" + key + "'");
    }
  }
  if (j.contains("model")) from_json(j.at("model"), c.model);
  if (j.contains("train")) from_json(j.at("train"), c.train);
  if (j.contains("loss")) from_json(j.at("loss"), c.loss);
  if (j.contains("synth")) from_json(j.at("synth"), c.synth);
  if (j.contains("eval")) from_json(j.at("eval"), c.eval);
  if (j.contains("regularizer")) j.at("regularizer").get_to(c.regularizer);
  if (j.contains("jobs")) j.at("jobs").get_to(c.jobs);
}

/// Layers a JSON config file over the built-in defaults.
inline RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = default_run_config()) {
  try {
    from_json(nlohmann::json::parse(read_file(path)), base);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
  return base;
}

inline std::string dump_run_config(const RunConfig& c) { return nlohmann::json(c).dump(2) + "\n"; }

}  // namespace insight
