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

// Per-client bandwidth traces: synthetic generation and the CSV exchange
// format
//
//   client_id,t_seconds,bw_mbps
//   0,0,2.5
//   0,1,2.4375
//
// Rows are grouped by client and strictly increasing in t within a client.
// `t_seconds` is an integer and `bw_mbps` a non-negative decimal.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "adapcomfl/common.hpp"
#include "adapcomfl/error.hpp"
#include "adapcomfl/rng.hpp"

namespace adapcomfl::bw {

inline constexpr std::string_view kTraceCsvHeader = "client_id,t_seconds,bw_mbps";

struct TraceSample {
  std::int64_t t = 0;
  double bw = 0.0;

  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

enum class TraceSource { synthetic, file };

struct BandwidthTrace {
  ClientId client_id = 0;
  std::vector<TraceSample> samples;
  TraceSource source = TraceSource::synthetic;

  std::size_t size() const noexcept { return samples.size(); }

  /// Bandwidth at sample `index`, wrapping past the end so long
  /// experiments can replay a short trace.
  double bw_at(std::size_t index) const { return samples[index % samples.size()].bw; }

  void validate() const {
    if (samples.empty()) {
      throw ValidationError("trace for client " + std::to_string(client_id) + " is empty");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (!(samples[i].bw >= 0.0) || !std::isfinite(samples[i].bw)) {
        throw ValidationError("trace for client " + std::to_string(client_id) +
                              " has a negative or non-finite bandwidth at t=" +
                              std::to_string(samples[i].t));
      }
      if (i > 0 && samples[i].t <= samples[i - 1].t) {
        throw ValidationError("trace for client " + std::to_string(client_id) +
                              " has non-increasing timestamps at t=" +
                              std::to_string(samples[i].t));
      }
    }
  }

  /// Samples compare equal; `source` is provenance and is ignored.
  friend bool operator==(const BandwidthTrace& l, const BandwidthTrace& r) {
    return l.client_id == r.client_id && l.samples == r.samples;
  }
};

struct TraceParams {
  std::uint64_t seed = 0;
  std::int64_t duration_s = 3600;
  double base_bw = 2.0;
  double amplitude = 0.0;
  double noise_std = 0.0;
  double regime_shift_prob = 0.0;
  double period_s = 600.0;
  /// Lag-one correlation of the noise process.
  double noise_correlation = 0.8;
  /// Range the regime multiplier is redrawn from on a shift.
  double shift_low = 0.5;
  double shift_high = 1.5;
};

/// 1 Hz trace: regime * (base + amplitude * sin(2 pi t / period)) + AR(1)
/// noise, floored at zero. The regime multiplier starts at 1 and is redrawn
/// with probability `regime_shift_prob` each second.
inline BandwidthTrace generate_trace(ClientId client_id, const TraceParams& params) {
  if (params.duration_s < 1) throw InvalidArgument("trace duration must be at least 1 s");
  if (!(params.base_bw > 0.0)) throw InvalidArgument("trace base bandwidth must be positive");
  if (!(params.period_s > 0.0)) throw InvalidArgument("trace period must be positive");
  if (!(params.noise_std >= 0.0) || !(params.amplitude >= 0.0)) {
    throw InvalidArgument("trace amplitude and noise must be non-negative");
  }
  if (!(params.regime_shift_prob >= 0.0 && params.regime_shift_prob <= 1.0)) {
    throw InvalidArgument("regime shift probability must be in [0, 1]");
  }

  Rng rng(derive_seed(params.seed, client_id));
  const double phi = params.noise_correlation;
  const double innovation = params.noise_std * std::sqrt(1.0 - phi * phi);

  BandwidthTrace trace{client_id, {}, TraceSource::synthetic};
  trace.samples.reserve(static_cast<std::size_t>(params.duration_s));
  double noise = params.noise_std > 0.0 ? params.noise_std * rng.normal() : 0.0;
  double regime = 1.0;
  for (std::int64_t t = 0; t < params.duration_s; ++t) {
    if (t > 0) {
      if (params.noise_std > 0.0) noise = phi * noise + innovation * rng.normal();
      if (params.regime_shift_prob > 0.0 && rng.bernoulli(params.regime_shift_prob)) {
        regime = rng.uniform(params.shift_low, params.shift_high);
      }
    }
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) / params.period_s;
    const double level = params.base_bw + params.amplitude * std::sin(phase);
    trace.samples.push_back({t, std::max(0.0, regime * level + noise)});
  }
  return trace;
}

/// Writes traces in ascending client_id order.
inline void write_traces(std::ostream& os, std::span<const BandwidthTrace> traces) {
  std::vector<const BandwidthTrace*> order;
  for (const auto& t : traces) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* l, const auto* r) { return l->client_id < r->client_id; });
  os << kTraceCsvHeader << '\n';
  for (const auto* trace : order) {
    for (const auto& s : trace->samples) {
      os << trace->client_id << ',' << s.t << ',' << format_double(s.bw) << '\n';
    }
  }
}

inline std::vector<BandwidthTrace> parse_traces(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("trace file is empty, expected a header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader) {
    throw ParseError("expected header '" + std::string(kTraceCsvHeader) + "'", 1);
  }

  std::map<ClientId, BandwidthTrace> by_client;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 3) throw ParseError("expected 3 fields", line_no);
    ClientId id = 0;
    std::int64_t t = 0;
    double bw = 0.0;
    if (!parse_number(fields[0], id)) throw ParseError("bad client_id", line_no);
    if (!parse_number(fields[1], t)) throw ParseError("bad t_seconds", line_no);
    if (!parse_number(fields[2], bw) || !std::isfinite(bw)) {
      throw ParseError("bad bw_mbps", line_no);
    }
    if (bw < 0.0) {
      throw ValidationError("line " + std::to_string(line_no) + ": negative bw_mbps");
    }
    auto& trace = by_client[id];
    trace.client_id = id;
    trace.source = TraceSource::file;
    if (!trace.samples.empty() && t <= trace.samples.back().t) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": timestamps for client " + std::to_string(id) +
                            " are not strictly increasing");
    }
    trace.samples.push_back({t, bw});
  }

  std::vector<BandwidthTrace> out;
  out.reserve(by_client.size());
  for (auto& [_, trace] : by_client) out.push_back(std::move(trace));
  return out;
}

inline std::vector<BandwidthTrace> load_traces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trace file: " + path);
  return parse_traces(in);
}

}  // namespace adapcomfl::bw
