// Copyright 2026 The AdapComFL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

// JSON experiment configuration. Every key is optional and defaults to the
// value in ExperimentConfig; unknown keys are rejected. Layout:
//
//   {
//     "seed": 1, "algorithm": "adapcomfl", "clients": 7, "rounds": 100,
//     "link":      {"deadline_s": 0.5, "snr": 3, "bits_per_value": 32},
//     "sketch":    {"columns": 64, "row_min": 3, "row_max": 10,
//                   "cv_threshold": 0.5, "fixed_rows": 7},
//     "predictor": {"kind": "mini_lstm", "sequence_length": 6,
//                   "buffer_capacity": 60, "hidden": [16, 8],
//                   "epochs_per_round": 5, "lr": 0.05},
//     "model":     {"kind": "logistic", "hidden": 32, "lr": 0.05,
//                   "local_epochs": 1, "batch_size": 32},
//     "data":      {"samples": 3000, "dims": 39, "classes": 5,
//                   "class_separation": 3, "alpha": 0.5, "test_fraction": 0.2},
//     "traces":    {"file": "", "train_seconds": 10,
//                   "synthetic": {"base_mbps": 0.0016, "spread": 2,
//                                 "amplitude": 0.3, "noise": 0.05,
//                                 "shift_prob": 0, "period_s": 600}}
//   }

#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

#include <json.hpp>

#include "adapcomfl/error.hpp"
#include "adapcomfl/netsim.hpp"

namespace adapcomfl::cli {

using nlohmann::json;

namespace detail {

/// Walks one JSON object, reading known keys and collecting every problem.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path, std::vector<std::string>& errors)
      : node_(node), path_(std::move(path)), errors_(errors) {
    if (!node_.is_object()) fail(path_.empty() ? "<root>" : path_, "must be an object");
  }

  ~ObjectReader() = default;

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!node_.is_object() || !node_.contains(key)) return;
    const auto& v = node_.at(key);
    const auto field = name(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) return fail(field, "must be a boolean");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) return fail(field, "must be a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) return fail(field, "must be an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned()) {
        return fail(field, "must be non-negative");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return fail(field, "must be a string");
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      if (!v.is_array()) return fail(field, "must be an array of integers");
      for (const auto& item : v) {
        if (!item.is_number_unsigned()) return fail(field, "must be an array of non-negative integers");
      }
    }
    out = v.get<T>();
  }

  template <typename Enum, typename Parse>
  void read_enum(const char* key, Enum& out, Parse parse) {
    std::string name_value;
    bool present = node_.is_object() && node_.contains(key);
    read(key, name_value);
    if (!present || !node_.at(key).is_string()) return;
    if (auto parsed = parse(name_value)) {
      out = *parsed;
    } else {
      fail(name(key), "unknown value '" + name_value + "'");
    }
  }

  /// Sub-object reader; absent keys read as an empty object.
  ObjectReader child(const char* key) {
    seen_.insert(key);
    if (node_.is_object() && node_.contains(key)) return {node_.at(key), name(key), errors_};
    return {empty(), name(key), errors_};
  }

  void reject_unknown() {
    if (!node_.is_object()) return;
    for (const auto& [key, _] : node_.items()) {
      if (!seen_.count(key)) fail(name(key.c_str()), "unknown key");
    }
  }

 private:
  static const json& empty() {
    static const json obj = json::object();
    return obj;
  }

  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void fail(const std::string& field, const std::string& why) { errors_.push_back(field + ": " + why); }

  const json& node_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline json to_json(const sim::ExperimentConfig& c) {
  return json{
      {"seed", c.seed},
      {"algorithm", sim::to_string(c.algorithm)},
      {"clients", c.clients},
      {"rounds", c.rounds},
      {"link",
       {{"deadline_s", c.link.deadline_s}, {"snr", c.link.snr}, {"bits_per_value", c.link.bits_per_value}}},
      {"sketch",
       {{"columns", c.sketch.columns},
        {"row_min", c.sketch.row_min},
        {"row_max", c.sketch.row_max},
        {"cv_threshold", c.sketch.cv_threshold},
        {"fixed_rows", c.sketch.fixed_rows}}},
      {"predictor",
       {{"kind", bw::to_string(c.predictor.kind)},
        {"sequence_length", c.predictor.sequence_length},
        {"buffer_capacity", c.predictor.buffer_capacity},
        {"hidden", c.predictor.hidden},
        {"epochs_per_round", c.predictor.epochs_per_round},
        {"lr", c.predictor.lr}}},
      {"model",
       {{"kind", ml::to_string(c.model.kind)},
        {"hidden", c.model.hidden},
        {"lr", c.model.lr},
        {"local_epochs", c.model.local_epochs},
        {"batch_size", c.model.batch_size}}},
      {"data",
       {{"samples", c.data.samples},
        {"dims", c.data.dims},
        {"classes", c.data.classes},
        {"class_separation", c.data.class_separation},
        {"alpha", c.data.alpha},
        {"test_fraction", c.data.test_fraction}}},
      {"traces",
       {{"file", c.traces.file},
        {"train_seconds", c.traces.train_seconds},
        {"synthetic",
         {{"base_mbps", c.traces.synthetic.base_mbps},
          {"spread", c.traces.synthetic.spread},
          {"amplitude", c.traces.synthetic.amplitude},
          {"noise", c.traces.synthetic.noise},
          {"shift_prob", c.traces.synthetic.shift_prob},
          {"period_s", c.traces.synthetic.period_s}}}}},
  };
}

/// Reads and validates a config. Throws ValidationError listing every
/// offending field.
inline sim::ExperimentConfig config_from_json(const json& root) {
  sim::ExperimentConfig c;
  std::vector<std::string> errors;
  detail::ObjectReader top(root, "", errors);
  top.read("seed", c.seed);
  top.read_enum("algorithm", c.algorithm, sim::algorithm_from_string);
  top.read("clients", c.clients);
  top.read("rounds", c.rounds);
  {
    auto r = top.child("link");
    r.read("deadline_s", c.link.deadline_s);
    r.read("snr", c.link.snr);
    r.read("bits_per_value", c.link.bits_per_value);
    r.reject_unknown();
  }
  {
    auto r = top.child("sketch");
    r.read("columns", c.sketch.columns);
    r.read("row_min", c.sketch.row_min);
    r.read("row_max", c.sketch.row_max);
    r.read("cv_threshold", c.sketch.cv_threshold);
    r.read("fixed_rows", c.sketch.fixed_rows);
    r.reject_unknown();
  }
  {
    auto r = top.child("predictor");
    r.read_enum("kind", c.predictor.kind, bw::predictor_kind_from_string);
    r.read("sequence_length", c.predictor.sequence_length);
    r.read("buffer_capacity", c.predictor.buffer_capacity);
    r.read("hidden", c.predictor.hidden);
    r.read("epochs_per_round", c.predictor.epochs_per_round);
    r.read("lr", c.predictor.lr);
    r.reject_unknown();
  }
  {
    auto r = top.child("model");
    r.read_enum("kind", c.model.kind, ml::model_kind_from_string);
    r.read("hidden", c.model.hidden);
    r.read("lr", c.model.lr);
    r.read("local_epochs", c.model.local_epochs);
    r.read("batch_size", c.model.batch_size);
    r.reject_unknown();
  }
  {
    auto r = top.child("data");
    r.read("samples", c.data.samples);
    r.read("dims", c.data.dims);
    r.read("classes", c.data.classes);
    r.read("class_separation", c.data.class_separation);
    r.read("alpha", c.data.alpha);
    r.read("test_fraction", c.data.test_fraction);
    r.reject_unknown();
  }
  {
    auto r = top.child("traces");
    r.read("file", c.traces.file);
    r.read("train_seconds", c.traces.train_seconds);
    auto s = r.child("synthetic");
    s.read("base_mbps", c.traces.synthetic.base_mbps);
    s.read("spread", c.traces.synthetic.spread);
    s.read("amplitude", c.traces.synthetic.amplitude);
    s.read("noise", c.traces.synthetic.noise);
    s.read("shift_prob", c.traces.synthetic.shift_prob);
    s.read("period_s", c.traces.synthetic.period_s);
    s.reject_unknown();
    r.reject_unknown();
  }
  top.reject_unknown();

  if (errors.empty()) {
    for (auto& p : c.problems()) errors.push_back(std::move(p));
  }
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }
  return c;
}

inline sim::ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(root);
}

inline std::string serialize_config(const sim::ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

inline sim::ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace adapcomfl::cli
