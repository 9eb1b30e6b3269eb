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

// Evaluation report and its JSON / CSV serializations. The JSON layout is
// documented in docs/formats.md; validate_report_json checks it.

#include <array>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "insight/eval/metrics.hpp"
#include "insight/eval/stratify.hpp"

namespace insight {

inline constexpr int kReportSchemaVersion = 1;

struct BagResult {
  std::string bag_id;
  std::vector<std::uint8_t> labels;
  std::vector<double> y_hat;
  std::vector<double> dice;  // per label; empty when the bag has no masks

  friend bool operator==(const BagResult&, const BagResult&) = default;
};

struct LabelSummary {
  std::optional<double> auc;
  std::optional<MeanStd> dice_positive;  // over bags whose mask for this label is non-empty

  friend bool operator==(const LabelSummary&, const LabelSummary&) = default;
};

struct StratumSummary {
  std::string name;
  double min_area = 0;
  std::optional<double> max_area;  // nullopt = unbounded
  std::size_t count = 0;
  std::optional<MeanStd> dice;
  std::optional<double> p_value;

  friend bool operator==(const StratumSummary&, const StratumSummary&) = default;
};

struct EvalReport {
  std::string saliency = "builtin";
  std::string binarization = "otsu";
  std::size_t num_labels = 0;
  bool has_masks = false;
  std::vector<BagResult> bags;
  std::vector<LabelSummary> labels;
  std::optional<double> auc_mean;
  std::optional<MeanStd> dice_positive;
  std::vector<StratumSummary> strata;
  std::vector<LesionScore> lesions;
  std::optional<std::size_t> permutation_iterations;
  std::optional<double> permutation_p_overall;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

namespace detail {

template <typename V>
nlohmann::json opt(const std::optional<V>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename V>
std::optional<V> get_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<V>();
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const MeanStd& m) { j = {{"mean", m.mean}, {"std", m.std}, {"n", m.n}}; }
inline void from_json(const nlohmann::json& j, MeanStd& m) {
  j.at("mean").get_to(m.mean);
  j.at("std").get_to(m.std);
  j.at("n").get_to(m.n);
}

inline Stratum parse_stratum(const std::string& s) {
  for (std::size_t i = 0; i < kStratumNames.size(); ++i) {
    if (s == kStratumNames[i]) return static_cast<Stratum>(i);
  }
  throw FormatError("unknown stratum '" + s + "'");
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  using nlohmann::json;
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["saliency"] = r.saliency;
  j["binarization"] = r.binarization;
  j["num_labels"] = r.num_labels;
  j["has_masks"] = r.has_masks;

  json bags = json::array();
  for (const auto& b : r.bags) {
    json jb = {{"bag_id", b.bag_id}, {"labels", b.labels}, {"y_hat", b.y_hat}};
    if (r.has_masks) jb["dice"] = b.dice;
    bags.push_back(std::move(jb));
  }
  j["bags"] = std::move(bags);

  json labels = json::array();
  for (const auto& l : r.labels) {
    json jl = {{"auc", detail::opt(l.auc)}};
    if (r.has_masks) jl["dice_positive"] = detail::opt(l.dice_positive);
    labels.push_back(std::move(jl));
  }
  j["labels"] = std::move(labels);
  j["auc_mean"] = detail::opt(r.auc_mean);

  if (r.has_masks) {
    j["dice_positive"] = detail::opt(r.dice_positive);
    json strata = json::array();
    for (const auto& s : r.strata) {
      strata.push_back({{"name", s.name},
                        {"min_area", s.min_area},
                        {"max_area", detail::opt(s.max_area)},
                        {"count", s.count},
                        {"dice", detail::opt(s.dice)},
                        {"p_value", detail::opt(s.p_value)}});
    }
    j["strata"] = std::move(strata);
    json lesions = json::array();
    for (const auto& l : r.lesions) {
      lesions.push_back({{"bag_id", l.bag_id},
                         {"label", l.label},
                         {"index", l.index},
                         {"area", l.area},
                         {"stratum", to_string(l.stratum)},
                         {"dice", l.dice}});
    }
    j["lesions"] = std::move(lesions);
  }
  if (r.permutation_iterations) {
    j["permutation"] = {{"iterations", *r.permutation_iterations},
                        {"p_overall", detail::opt(r.permutation_p_overall)}};
  }
  return j;
}

/// Structural validation of a serialized report. Returns one message per problem.
inline std::vector<std::string> validate_report_json(const nlohmann::json& j) {
  std::vector<std::string> errs;
  auto need = [&](const nlohmann::json& obj, const char* key, auto pred, const char* what, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) {
      errs.push_back(where + ": missing '" + key + "'");
      return false;
    }
    if (!pred(obj.at(key))) {
      errs.push_back(where + ": '" + key + "' must be " + what);
      return false;
    }
    return true;
  };
  auto is_int = [](const nlohmann::json& v) { return v.is_number_unsigned() || v.is_number_integer(); };
  auto is_str = [](const nlohmann::json& v) { return v.is_string(); };
  auto is_bool = [](const nlohmann::json& v) { return v.is_boolean(); };
  auto is_arr = [](const nlohmann::json& v) { return v.is_array(); };
  auto unit_or_null = [](const nlohmann::json& v) {
    return v.is_null() || (v.is_number() && v.get<double>() >= 0 && v.get<double>() <= 1);
  };
  auto p_or_null = [](const nlohmann::json& v) {
    return v.is_null() || (v.is_number() && v.get<double>() > 0 && v.get<double>() <= 1);
  };
  auto meanstd_or_null = [](const nlohmann::json& v) {
    return v.is_null() || (v.is_object() && v.contains("mean") && v.contains("std") && v.contains("n") &&
                           v.at("mean").is_number() && v.at("mean").get<double>() >= 0 &&
                           v.at("mean").get<double>() <= 1 && v.at("std").is_number());
  };

  if (!j.is_object()) return {"report: not a JSON object"};
  if (need(j, "schema_version", is_int, "an integer", "report") && j.at("schema_version") != kReportSchemaVersion) {
    errs.push_back("report: unsupported schema_version");
  }
  need(j, "saliency", is_str, "a string", "report");
  need(j, "binarization", is_str, "a string", "report");
  need(j, "num_labels", is_int, "an integer", "report");
  const bool masks = need(j, "has_masks", is_bool, "a boolean", "report") && j.at("has_masks").get<bool>();
  need(j, "auc_mean", unit_or_null, "null or a number in [0,1]", "report");
  const std::size_t C = j.contains("num_labels") && is_int(j.at("num_labels")) ? j.at("num_labels").get<std::size_t>() : 0;

  if (need(j, "bags", is_arr, "an array", "report")) {
    for (std::size_t i = 0; i < j.at("bags").size(); ++i) {
      const auto& b = j.at("bags")[i];
      const std::string where = "bags[" + std::to_string(i) + "]";
      need(b, "bag_id", is_str, "a string", where);
      if (need(b, "labels", is_arr, "an array", where) && b.at("labels").size() != C) errs.push_back(where + ": labels length != num_labels");
      if (need(b, "y_hat", is_arr, "an array", where)) {
        for (const auto& v : b.at("y_hat")) {
          if (!v.is_number() || v.get<double>() < 0 || v.get<double>() > 1) errs.push_back(where + ": y_hat outside [0,1]");
        }
      }
      if (masks) {
        if (need(b, "dice", is_arr, "an array", where)) {
          for (const auto& v : b.at("dice")) {
            if (!unit_or_null(v) || v.is_null()) errs.push_back(where + ": dice outside [0,1]");
          }
        }
      } else if (b.contains("dice")) {
        errs.push_back(where + ": dice present without masks");
      }
    }
  }
  if (need(j, "labels", is_arr, "an array", "report")) {
    if (j.at("labels").size() != C) errs.push_back("report: labels length != num_labels");
    for (std::size_t i = 0; i < j.at("labels").size(); ++i) {
      const auto& l = j.at("labels")[i];
      const std::string where = "labels[" + std::to_string(i) + "]";
      need(l, "auc", unit_or_null, "null or a number in [0,1]", where);
      if (masks) need(l, "dice_positive", meanstd_or_null, "null or {mean,std,n}", where);
    }
  }
  if (masks) {
    need(j, "dice_positive", meanstd_or_null, "null or {mean,std,n}", "report");
    if (need(j, "strata", is_arr, "an array", "report")) {
      if (j.at("strata").size() != 3) errs.push_back("report: expected 3 strata");
      for (std::size_t i = 0; i < j.at("strata").size(); ++i) {
        const auto& s = j.at("strata")[i];
        const std::string where = "strata[" + std::to_string(i) + "]";
        need(s, "name", is_str, "a string", where);
        need(s, "count", is_int, "an integer", where);
        need(s, "dice", meanstd_or_null, "null or {mean,std,n}", where);
        need(s, "p_value", p_or_null, "null or a number in (0,1]", where);
      }
    }
    if (need(j, "lesions", is_arr, "an array", "report")) {
      for (std::size_t i = 0; i < j.at("lesions").size(); ++i) {
        const auto& l = j.at("lesions")[i];
        const std::string where = "lesions[" + std::to_string(i) + "]";
        need(l, "bag_id", is_str, "a string", where);
        need(l, "area", is_int, "an integer", where);
        need(l, "stratum", is_str, "a string", where);
        need(l, "dice", unit_or_null, "a number in [0,1]", where);
      }
    }
  }
  if (j.contains("permutation")) {
    need(j.at("permutation"), "iterations", is_int, "an integer", "permutation");
    need(j.at("permutation"), "p_overall", p_or_null, "null or a number in (0,1]", "permutation");
  }
  return errs;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  if (auto errs = validate_report_json(j); !errs.empty()) throw FormatError("invalid report: " + errs.front());
  EvalReport r;
  r.saliency = j.at("saliency").get<std::string>();
  r.binarization = j.at("binarization").get<std::string>();
  r.num_labels = j.at("num_labels").get<std::size_t>();
  r.has_masks = j.at("has_masks").get<bool>();
  for (const auto& jb : j.at("bags")) {
    BagResult b;
    b.bag_id = jb.at("bag_id").get<std::string>();
    b.labels = jb.at("labels").get<std::vector<std::uint8_t>>();
    b.y_hat = jb.at("y_hat").get<std::vector<double>>();
    if (r.has_masks) b.dice = jb.at("dice").get<std::vector<double>>();
    r.bags.push_back(std::move(b));
  }
  for (const auto& jl : j.at("labels")) {
    LabelSummary l;
    l.auc = detail::get_opt<double>(jl, "auc");
    if (r.has_masks) l.dice_positive = detail::get_opt<MeanStd>(jl, "dice_positive");
    r.labels.push_back(l);
  }
  r.auc_mean = detail::get_opt<double>(j, "auc_mean");
  if (r.has_masks) {
    r.dice_positive = detail::get_opt<MeanStd>(j, "dice_positive");
    for (const auto& js : j.at("strata")) {
      StratumSummary s;
      s.name = js.at("name").get<std::string>();
      s.min_area = js.at("min_area").get<double>();
      s.max_area = detail::get_opt<double>(js, "max_area");
      s.count = js.at("count").get<std::size_t>();
      s.dice = detail::get_opt<MeanStd>(js, "dice");
      s.p_value = detail::get_opt<double>(js, "p_value");
      r.strata.push_back(std::move(s));
    }
    for (const auto& jl : j.at("lesions")) {
      LesionScore l;
      l.bag_id = jl.at("bag_id").get<std::string>();
      l.label = jl.at("label").get<std::size_t>();
      l.index = jl.at("index").get<std::size_t>();
      l.area = jl.at("area").get<std::size_t>();
      l.stratum = parse_stratum(jl.at("stratum").get<std::string>());
      l.dice = jl.at("dice").get<double>();
      r.lesions.push_back(std::move(l));
    }
  }
  if (j.contains("permutation")) {
    r.permutation_iterations = j.at("permutation").at("iterations").get<std::size_t>();
    r.permutation_p_overall = detail::get_opt<double>(j.at("permutation"), "p_overall");
  }
  return r;
}

/// One row per (bag, label): bag_id,label,target,y_hat,dice
inline std::string report_to_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "bag_id,label,target,y_hat,dice\n";
  char buf[64];
  for (const auto& b : r.bags) {
    for (std::size_t c = 0; c < b.y_hat.size(); ++c) {
      out << b.bag_id << ',' << c << ',' << static_cast<int>(b.labels[c]) << ',';
      std::snprintf(buf, sizeof buf, "%.9g", b.y_hat[c]);
      out << buf << ',';
      if (c < b.dice.size()) {
        std::snprintf(buf, sizeof buf, "%.9g", b.dice[c]);
        out << buf;
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace insight
