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
#include <map>
#include <tuple>

#include "insight/eval/gradcam.hpp"
#include "insight/eval/metrics.hpp"
#include "insight/eval/permutation.hpp"
#include "insight/eval/report.hpp"
#include "insight/eval/stratify.hpp"
#include "insight/model/forward.hpp"
#include "insight/util/parallel.hpp"

namespace insight {

enum class SaliencySource { kBuiltin, kGradCam };

struct EvalOptions {
  Binarization binarization = Binarization::otsu();
  SaliencySource saliency = SaliencySource::kBuiltin;
  StrataBounds bounds;
  const EvalReport* comparator = nullptr;
  std::size_t permutation_iterations = 10000;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

/// Per-bag output before aggregation.
struct BagEvaluation {
  BagResult result;
  std::vector<LesionScore> lesions;
};

template <Real T>
BagEvaluation evaluate_bag(const BagOfPatches& bag, const ModelParams<T>& params, const ModelConfig& cfg,
                           const EvalOptions& opts) {
  BagEvaluation ev;
  const auto fwd = forward_bag(bag, params, cfg);
  ev.result.bag_id = bag.bag_id;
  ev.result.labels = bag.labels;
  ev.result.y_hat = fwd.prediction.y_hat;
  if (!bag.has_masks()) return ev;

  FullHeatmap<T> map;
  Binarization method = opts.binarization;
  if (opts.saliency == SaliencySource::kGradCam) {
    map = grad_cam_saliency(bag, params, cfg).saliency;
  } else {
    map = fwd.prediction.fused;
    if (method.method == Binarization::Method::kOtsu) method.bins = cfg.otsu_bins;
  }
  for (std::size_t c = 0; c < bag.num_labels(); ++c) {
    const BinaryMask pred = binarize_heatmap(map, c, method);
    ev.result.dice.push_back(dice(pred, bag.masks[c]));
    auto lesions = score_lesions(bag.bag_id, c, pred, bag.masks[c], opts.bounds);
    ev.lesions.insert(ev.lesions.end(), lesions.begin(), lesions.end());
  }
  return ev;
}

namespace detail {

inline std::string binarization_name(const Binarization& b) {
  if (b.method == Binarization::Method::kOtsu) return "otsu";
  char buf[64];
  std::snprintf(buf, sizeof buf, "fixed:%.6g", b.threshold);
  return buf;
}

using LesionKey = std::tuple<std::string, std::size_t, std::size_t>;

inline std::map<LesionKey, double> lesion_index(const std::vector<LesionScore>& lesions) {
  std::map<LesionKey, double> out;
  for (const auto& l : lesions) out[{l.bag_id, l.label, l.index}] = l.dice;
  return out;
}

}  // namespace detail

/// Aggregates per-bag evaluations. Results are sorted by bag id first, so the
/// report does not depend on the input order.
inline EvalReport aggregate_report(std::vector<BagEvaluation> evals, std::size_t num_labels, const EvalOptions& opts,
                                   const std::string& saliency_name) {
  std::sort(evals.begin(), evals.end(),
            [](const BagEvaluation& a, const BagEvaluation& b) { return a.result.bag_id < b.result.bag_id; });
  EvalReport r;
  r.saliency = saliency_name;
  r.binarization = detail::binarization_name(opts.binarization);
  r.num_labels = num_labels;
  r.has_masks = !evals.empty() && std::all_of(evals.begin(), evals.end(), [](const BagEvaluation& e) {
    return !e.result.dice.empty();
  });

  std::vector<double> all_positive_dice;
  std::vector<double> aucs;
  r.labels.resize(num_labels);
  for (std::size_t c = 0; c < num_labels; ++c) {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    std::vector<double> pos_dice;
    for (const auto& e : evals) {
      scores.push_back(e.result.y_hat.at(c));
      labels.push_back(e.result.labels.at(c));
    }
    try {
      r.labels[c].auc = auc(scores, labels);
      aucs.push_back(*r.labels[c].auc);
    } catch (const MetricError&) {
    }
    if (r.has_masks) {
      for (const auto& e : evals) {
        if (e.result.labels[c]) pos_dice.push_back(e.result.dice[c]);
      }
      if (!pos_dice.empty()) r.labels[c].dice_positive = mean_std(pos_dice);
      all_positive_dice.insert(all_positive_dice.end(), pos_dice.begin(), pos_dice.end());
    }
  }
  if (!aucs.empty()) r.auc_mean = mean_std(aucs).mean;

  for (auto& e : evals) r.bags.push_back(std::move(e.result));
  if (!r.has_masks) {
    for (auto& b : r.bags) b.dice.clear();
    return r;
  }
  if (!all_positive_dice.empty()) r.dice_positive = mean_std(all_positive_dice);

  for (auto& e : evals) r.lesions.insert(r.lesions.end(), e.lesions.begin(), e.lesions.end());
  const auto strata = stratified_dice(r.lesions);
  const std::array<double, 4> edges = {0, opts.bounds.small_max, opts.bounds.moderate_max, 0};
  for (std::size_t s = 0; s < 3; ++s) {
    StratumSummary ss;
    ss.name = kStratumNames[s];
    ss.min_area = edges[s];
    if (s < 2) ss.max_area = edges[s + 1];
    ss.count = static_cast<std::size_t>(std::count_if(r.lesions.begin(), r.lesions.end(), [&](const LesionScore& l) {
      return static_cast<std::size_t>(l.stratum) == s;
    }));
    ss.dice = strata[s];
    r.strata.push_back(std::move(ss));
  }

  if (opts.comparator) {
    const auto theirs = detail::lesion_index(opts.comparator->lesions);
    std::array<std::vector<double>, 3> diffs;
    std::vector<double> all;
    for (const auto& l : r.lesions) {
      auto it = theirs.find({l.bag_id, l.label, l.index});
      if (it == theirs.end()) {
        throw ArgumentError("comparator report lacks lesion " + std::to_string(l.index) + " of bag '" + l.bag_id + "'");
      }
      const double d = l.dice - it->second;
      diffs[static_cast<std::size_t>(l.stratum)].push_back(d);
      all.push_back(d);
    }
    r.permutation_iterations = opts.permutation_iterations;
    for (std::size_t s = 0; s < 3; ++s) {
      if (!diffs[s].empty()) r.strata[s].p_value = permutation_test(diffs[s], opts.permutation_iterations, opts.seed + s);
    }
    if (!all.empty()) r.permutation_p_overall = permutation_test(all, opts.permutation_iterations, opts.seed + 3);
  }
  return r;
}

template <Real T>
EvalReport evaluate_dataset(const ModelParams<T>& params, const ModelConfig& cfg, const std::vector<BagOfPatches>& bags,
                            const EvalOptions& opts = {}) {
  opts.bounds.validate();
  std::vector<BagEvaluation> evals(bags.size());
  parallel_for(bags.size(), opts.jobs, [&](std::size_t i) { evals[i] = evaluate_bag(bags[i], params, cfg, opts); });
  return aggregate_report(std::move(evals), cfg.num_labels, opts,
                          opts.saliency == SaliencySource::kGradCam ? "gradcam" : "builtin");
}

}  // namespace insight
