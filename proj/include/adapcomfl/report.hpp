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

// Output files of an experiment.
//
// metrics.csv has one row per (round, client):
//   round,client_id,algorithm,b_pred_mbps,b_true_mbps,rows_a,d_prime_slots,
//   uplink_time_s,deadline_met,cr,global_accuracy_pct,predictor_mae_mbps
// Numbers use the shortest round-trip decimal form, booleans are
// true/false, lines end in LF. Baselines write b_pred_mbps = 0 and
// predictor_mae_mbps = 0 since they do not predict; FedAvg writes rows_a = 0.
//
// summary.json holds the experiment summary (see summary_json for keys).

#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adapcomfl/common.hpp"
#include "adapcomfl/error.hpp"
#include "adapcomfl/netsim.hpp"

namespace adapcomfl::cli {

inline constexpr std::string_view kMetricsCsvHeader =
    "round,client_id,algorithm,b_pred_mbps,b_true_mbps,rows_a,d_prime_slots,uplink_time_s,"
    "deadline_met,cr,global_accuracy_pct,predictor_mae_mbps";

struct MetricsRow {
  std::size_t round = 0;
  ClientId client_id = 0;
  std::string algorithm;
  double b_pred_mbps = 0.0;
  double b_true_mbps = 0.0;
  std::size_t rows_a = 0;
  std::uint64_t d_prime_slots = 0;
  double uplink_time_s = 0.0;
  bool deadline_met = true;
  double cr = 0.0;
  double global_accuracy_pct = 0.0;
  double predictor_mae_mbps = 0.0;
};

inline void write_metrics_csv(std::ostream& os, const sim::ExperimentResult& result) {
  const auto algo = sim::to_string(result.algorithm);
  os << kMetricsCsvHeader << '\n';
  for (const auto& r : result.rounds) {
    for (const auto& c : r.clients) {
      os << r.round << ',' << c.client_id << ',' << algo << ',' << format_double(c.b_pred) << ','
         << format_double(c.b_true) << ',' << c.rows << ',' << c.d_prime << ','
         << format_double(c.uplink_time) << ',' << (c.deadline_met ? "true" : "false") << ','
         << format_double(c.cr) << ',' << format_double(r.global_accuracy) << ','
         << format_double(r.mean_mae) << '\n';
    }
  }
}

inline std::vector<MetricsRow> read_metrics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kMetricsCsvHeader) {
    throw ParseError("metrics.csv header mismatch", 1);
  }
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 12) throw ParseError("expected 12 fields", line_no);
    MetricsRow row;
    row.algorithm = std::string(f[2]);
    bool ok = parse_number(f[0], row.round) && parse_number(f[1], row.client_id) &&
              parse_number(f[3], row.b_pred_mbps) && parse_number(f[4], row.b_true_mbps) &&
              parse_number(f[5], row.rows_a) && parse_number(f[6], row.d_prime_slots) &&
              parse_number(f[7], row.uplink_time_s) && parse_number(f[9], row.cr) &&
              parse_number(f[10], row.global_accuracy_pct) &&
              parse_number(f[11], row.predictor_mae_mbps);
    if (f[8] == "true") {
      row.deadline_met = true;
    } else if (f[8] == "false") {
      row.deadline_met = false;
    } else {
      ok = false;
    }
    if (!ok) throw ParseError("malformed metrics row", line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Keys: algorithm, clients, rounds, model_parameters, final_accuracy_pct,
/// mean_cr, mean_uplink_time_s, mean_uplink_volume_slots,
/// deadline_violations, predictor_mae_mbps, shard_fingerprints (hex FNV-1a
/// of each client's shard, client order).
inline nlohmann::json summary_json(const sim::ExperimentResult& result) {
  nlohmann::json shards = nlohmann::json::array();
  for (auto fp : result.shard_fingerprints) shards.push_back(hex64(fp));
  const auto& s = result.summary;
  return {
      {"algorithm", sim::to_string(result.algorithm)},
      {"clients", result.rounds.empty() ? 0 : result.rounds.front().clients.size()},
      {"rounds", result.rounds.size()},
      {"model_parameters", result.model_parameters},
      {"final_accuracy_pct", s.final_accuracy},
      {"mean_cr", s.mean_cr},
      {"mean_uplink_time_s", s.mean_uplink_time},
      {"mean_uplink_volume_slots", s.mean_volume},
      {"deadline_violations", s.deadline_violations},
      {"predictor_mae_mbps", s.predictor_mae},
      {"shard_fingerprints", shards},
  };
}

}  // namespace adapcomfl::cli
