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

// Subcommand bodies behind the adapcomfl CLI. Each returns a process exit
// status and reports diagnostics on `err`.

#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "adapcomfl/config.hpp"
#include "adapcomfl/netsim.hpp"
#include "adapcomfl/report.hpp"
#include "adapcomfl/trace.hpp"

namespace adapcomfl::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitBadInput = 2;

namespace detail {

/// Loads a config; a relative trace file is resolved against the config's
/// directory.
inline sim::ExperimentConfig load_experiment(const std::string& config_path) {
  if (!fs::exists(config_path)) throw ValidationError("config file not found: " + config_path);
  auto config = load_config(config_path);
  if (!config.traces.file.empty() && fs::path(config.traces.file).is_relative()) {
    config.traces.file = (fs::path(config_path).parent_path() / config.traces.file).string();
  }
  return config;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline void write_outputs(const fs::path& dir, const sim::ExperimentResult& result) {
  fs::create_directories(dir);
  std::ofstream csv(dir / "metrics.csv", std::ios::binary);
  write_metrics_csv(csv, result);
  csv.close();
  if (!csv) throw std::runtime_error("failed writing " + (dir / "metrics.csv").string());
  write_text(dir / "summary.json", summary_json(result).dump(2) + "\n");

  // Read back what was written so a zero exit means the files are usable.
  std::ifstream check(dir / "metrics.csv", std::ios::binary);
  const auto rows = read_metrics_csv(check);
  std::size_t expected = 0;
  for (const auto& r : result.rounds) expected += r.clients.size();
  if (rows.size() != expected) throw std::runtime_error("metrics.csv row count mismatch");
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace detail

inline int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                        std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto config = detail::load_experiment(config_path);
    const auto result = sim::run_experiment(config);
    detail::write_outputs(out_dir, result);
    out << "algorithm=" << sim::to_string(result.algorithm)
        << " final_accuracy_pct=" << format_double(result.summary.final_accuracy)
        << " mean_cr=" << format_double(result.summary.mean_cr) << '\n';
    return kExitOk;
  });
}

struct GenTracesOptions {
  std::size_t clients = 7;
  std::int64_t duration_s = 3600;
  std::uint64_t seed = 0;
  std::string out;
  double base_mbps = 0.0016;
  double amplitude_mbps = 0.0005;
  double noise_mbps = 0.0001;
  double shift_prob = 0.0;
  double period_s = 600.0;
};

inline int cmd_gen_traces(const GenTracesOptions& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (opt.clients == 0) throw ValidationError("--clients must be >= 1");
    if (opt.duration_s < 1) throw ValidationError("--duration must be >= 1");
    std::vector<bw::BandwidthTrace> traces;
    for (std::size_t i = 0; i < opt.clients; ++i) {
      bw::TraceParams p;
      p.seed = opt.seed;
      p.duration_s = opt.duration_s;
      p.base_bw = opt.base_mbps;
      p.amplitude = opt.amplitude_mbps;
      p.noise_std = opt.noise_mbps;
      p.regime_shift_prob = opt.shift_prob;
      p.period_s = opt.period_s;
      try {
        traces.push_back(bw::generate_trace(static_cast<ClientId>(i), p));
      } catch (const InvalidArgument& e) {
        throw ValidationError(e.what());
      }
    }
    const fs::path path(opt.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open " + opt.out + " for writing");
    bw::write_traces(file, traces);
    file.close();
    if (!file) throw std::runtime_error("failed writing " + opt.out);
    out << "wrote " << opt.clients * static_cast<std::size_t>(opt.duration_s) << " samples to "
        << opt.out << '\n';
    return kExitOk;
  });
}

/// Runs FedAvg, SketchFL and AdapComFL on one config. Writes
/// <out>/<algorithm>/{metrics.csv,summary.json} and <out>/comparison.json:
///   {"algorithms": {"fedavg": {...}, "sketchfl": {...}, "adapcomfl": {...}},
///    "shards_identical": true}
/// where each section has final_accuracy_pct, mean_uplink_volume_slots,
/// mean_uplink_time_s, mean_cr and deadline_violations.
inline int cmd_compare(const std::string& config_path, const std::string& out_dir,
                       std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto base = detail::load_experiment(config_path);
    nlohmann::json sections = nlohmann::json::object();
    std::vector<std::uint64_t> reference_shards;
    bool shards_identical = true;
    for (auto algo : {sim::Algorithm::fedavg, sim::Algorithm::sketchfl, sim::Algorithm::adapcomfl}) {
      auto config = base;
      config.algorithm = algo;
      const auto result = sim::run_experiment(config);
      const auto name = std::string(sim::to_string(algo));
      detail::write_outputs(fs::path(out_dir) / name, result);
      if (reference_shards.empty()) {
        reference_shards = result.shard_fingerprints;
      } else if (reference_shards != result.shard_fingerprints) {
        shards_identical = false;
      }
      const auto& s = result.summary;
      sections[name] = {
          {"final_accuracy_pct", s.final_accuracy},
          {"mean_uplink_volume_slots", s.mean_volume},
          {"mean_uplink_time_s", s.mean_uplink_time},
          {"mean_cr", s.mean_cr},
          {"deadline_violations", s.deadline_violations},
      };
      out << name << ": final_accuracy_pct=" << format_double(s.final_accuracy)
          << " mean_uplink_time_s=" << format_double(s.mean_uplink_time) << '\n';
    }
    detail::write_text(fs::path(out_dir) / "comparison.json",
                       nlohmann::json{{"algorithms", sections}, {"shards_identical", shards_identical}}
                               .dump(2) +
                           "\n");
    if (!shards_identical) throw std::runtime_error("algorithms saw different client shards");
    return kExitOk;
  });
}

}  // namespace adapcomfl::cli
