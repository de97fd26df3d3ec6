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

// Client side of one synchronous round for the three algorithms, FedAvg's
// weighted mean, and the Dirichlet non-IID split.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "adapcomfl/aggregation.hpp"
#include "adapcomfl/bandwidth.hpp"
#include "adapcomfl/error.hpp"
#include "adapcomfl/mlkit.hpp"
#include "adapcomfl/predictor.hpp"
#include "adapcomfl/rng.hpp"
#include "adapcomfl/sketch.hpp"
#include "adapcomfl/trace.hpp"

namespace adapcomfl::fl {

/// Knobs shared by every client in a round.
struct RoundSettings {
  std::size_t row_min = 3;
  std::size_t row_max = 10;
  std::size_t fixed_rows = 7;
  std::size_t local_epochs = 1;
  std::size_t batch_size = 32;
  double lr = 0.05;
  /// Trace seconds consumed (and observed) by one local training phase.
  std::size_t train_seconds = 10;
  std::size_t predictor_epochs = 5;
  double predictor_lr = 0.05;
};

struct ClientState {
  ClientId id = 0;
  ml::ModelWeights weights;
  bw::PredictorState predictor;
  bw::AwarenessBuffer buffer{60};
  ml::Dataset shard;
  std::shared_ptr<const bw::BandwidthTrace> trace;
  /// Next unread trace sample; only ever moves forward.
  std::size_t trace_cursor = 0;
  /// Seeds the client's minibatch shuffling.
  std::uint64_t seed = 0;
  std::size_t rounds_done = 0;
};

/// Per-client slice of a round record. b_pred is 0 for algorithms that do
/// not predict; rows is 0 for FedAvg.
struct ClientRecord {
  ClientId client_id = 0;
  double b_pred = 0.0;
  double b_true = 0.0;
  std::size_t rows = 0;
  std::uint64_t d_prime = 0;
  double uplink_time = 0.0;
  bool deadline_met = true;
  double cr = 0.0;
};

struct SketchRoundOutput {
  SketchUpload upload;
  ClientRecord record;
  /// The uploaded quantity before compression, lr * (accumulated gradient).
  std::vector<double> gradient;
};

struct FedAvgRoundOutput {
  ml::ModelWeights weights;
  ClientRecord record;
};

namespace detail {

inline void check_client(const ClientState& state, const sketch::HashFamily* family) {
  if (!state.trace || state.trace->samples.empty()) {
    throw InvalidArgument("client " + std::to_string(state.id) + " has no bandwidth trace");
  }
  if (state.shard.empty()) throw InvalidArgument("client " + std::to_string(state.id) + " has no data");
  if (family != nullptr && family->domain_size() != state.weights.values.size()) {
    throw InvalidArgument("hash family domain does not match the model size");
  }
}

/// Observes one training interval of the trace and runs local epochs on a
/// copy of the weights. Returns w_start - w_trained.
inline std::vector<double> train_and_observe(ClientState& state, const RoundSettings& settings) {
  for (std::size_t s = 0; s < settings.train_seconds; ++s) {
    state.buffer.observe(state.trace->bw_at(state.trace_cursor));
    ++state.trace_cursor;
  }
  Rng rng(derive_seed(state.seed, state.rounds_done));
  const auto trained = ml::train_local(state.weights, state.shard, settings.local_epochs,
                                       settings.batch_size, settings.lr, rng);
  std::vector<double> delta(state.weights.values.size());
  for (std::size_t p = 0; p < delta.size(); ++p) {
    delta[p] = state.weights.values[p] - trained.values[p];
  }
  return delta;
}

inline void apply_aggregate(ClientState& state, const sketch::AggregatedSketch* prev_agg,
                            const sketch::HashFamily& family) {
  if (prev_agg == nullptr) return;
  const auto update = sketch::decompress(*prev_agg, family, state.weights.values.size());
  for (std::size_t p = 0; p < update.size(); ++p) state.weights.values[p] -= update[p];
}

inline SketchRoundOutput finish_sketch_round(ClientState& state, std::vector<double> gradient,
                                             std::size_t rows, double b_pred,
                                             const bw::LinkModel& link,
                                             const sketch::HashFamily& family,
                                             const sketch::CollisionPolicy& policy) {
  const double b_true = state.trace->bw_at(state.trace_cursor);
  auto compressed = sketch::compress(gradient, rows, family, policy);
  ClientRecord rec;
  rec.client_id = state.id;
  rec.b_pred = b_pred;
  rec.b_true = b_true;
  rec.rows = rows;
  rec.d_prime = static_cast<std::uint64_t>(rows) * family.columns();
  rec.uplink_time = bw::uplink_time(link, rec.d_prime, b_true);
  rec.deadline_met = rec.uplink_time <= link.deadline_s;
  rec.cr = static_cast<double>(rec.d_prime) / static_cast<double>(gradient.size());
  ++state.rounds_done;
  return {{state.id, std::move(compressed)}, rec, std::move(gradient)};
}

}  // namespace detail

/// One AdapComFL client round:
///  1. apply the previous round's aggregate, w <- w - D(S_agg)
///  2. observe the trace while training locally, g = w - w_trained
///  3. predict the upload bandwidth (training the LSTM first, if any)
///  4. D = uplink_volume(b_pred), a = clamp(floor(D / b), row_min, row_max)
///  5. compress g into an a x b sketch
/// b_true is the trace sample at the upload instant, right after training.
inline SketchRoundOutput client_round(ClientState& state,
                                      const sketch::AggregatedSketch* prev_agg,
                                      const bw::LinkModel& link,
                                      const sketch::HashFamily& family,
                                      const sketch::CollisionPolicy& policy,
                                      const RoundSettings& settings) {
  detail::check_client(state, &family);
  detail::apply_aggregate(state, prev_agg, family);
  auto gradient = detail::train_and_observe(state, settings);

  if (state.predictor.kind == bw::PredictorKind::mini_lstm &&
      state.buffer.size() > state.predictor.sequence_length) {
    state.predictor = bw::train_mini_lstm(std::move(state.predictor), state.buffer,
                                          settings.predictor_epochs, settings.predictor_lr);
  }
  const double b_pred = bw::predict(state.predictor, state.buffer);
  const auto volume = bw::uplink_volume(link, b_pred);
  const auto rows =
      sketch::rows_for_volume(volume, family.columns(), settings.row_min, settings.row_max);
  return detail::finish_sketch_round(state, std::move(gradient), rows, b_pred, link, family,
                                     policy);
}

/// Fixed-size sketch baseline: same flow as client_round, no prediction,
/// always `settings.fixed_rows` rows.
inline SketchRoundOutput sketchfl_client_round(ClientState& state,
                                               const sketch::AggregatedSketch* prev_agg,
                                               const bw::LinkModel& link,
                                               const sketch::HashFamily& family,
                                               const sketch::CollisionPolicy& policy,
                                               const RoundSettings& settings) {
  detail::check_client(state, &family);
  detail::apply_aggregate(state, prev_agg, family);
  auto gradient = detail::train_and_observe(state, settings);
  return detail::finish_sketch_round(state, std::move(gradient), settings.fixed_rows, 0.0, link,
                                     family, policy);
}

/// FedAvg client: local training from the global weights, full model upload.
inline FedAvgRoundOutput fedavg_client_round(ClientState& state, const bw::LinkModel& link,
                                             const RoundSettings& settings) {
  detail::check_client(state, nullptr);
  const auto delta = detail::train_and_observe(state, settings);
  ml::ModelWeights trained = state.weights;
  for (std::size_t p = 0; p < delta.size(); ++p) trained.values[p] -= delta[p];

  ClientRecord rec;
  rec.client_id = state.id;
  rec.b_true = state.trace->bw_at(state.trace_cursor);
  rec.d_prime = trained.values.size();
  rec.uplink_time = bw::uplink_time(link, rec.d_prime, rec.b_true);
  rec.deadline_met = rec.uplink_time <= link.deadline_s;
  rec.cr = 1.0;
  ++state.rounds_done;
  return {std::move(trained), rec};
}

/// Sample-count weighted mean, sum_i (N_i / N) w_i.
inline ml::ModelWeights fedavg_aggregate(std::span<const ml::ModelWeights> weights,
                                         std::span<const std::size_t> sample_counts) {
  if (weights.empty() || weights.size() != sample_counts.size()) {
    throw InvalidArgument("fedavg_aggregate needs one sample count per model");
  }
  double total = 0.0;
  for (std::size_t n : sample_counts) {
    if (n == 0) throw InvalidArgument("fedavg_aggregate: sample counts must be positive");
    total += static_cast<double>(n);
  }
  ml::ModelWeights out{weights.front().arch,
                       std::vector<double>(weights.front().values.size(), 0.0)};
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].arch != out.arch || weights[i].values.size() != out.values.size()) {
      throw InvalidArgument("fedavg_aggregate: model shapes differ");
    }
    const double share = static_cast<double>(sample_counts[i]) / total;
    for (std::size_t p = 0; p < out.values.size(); ++p) out.values[p] += share * weights[i].values[p];
  }
  return out;
}

inline constexpr std::size_t kPartitionRetries = 100;

/// Dirichlet(alpha) label-skew split into `clients` index sets. Every class
/// is divided among clients by its own Dirichlet draw. Draws that leave a
/// client empty are redrawn; if all retries fail, empty clients take one
/// sample each from the largest shard.
inline std::vector<std::vector<std::size_t>> partition_indices(std::span<const std::uint32_t> labels,
                                                               std::size_t classes,
                                                               std::size_t clients, double alpha,
                                                               std::uint64_t seed) {
  if (clients == 0) throw InvalidArgument("partition needs at least one client");
  if (!(alpha > 0.0)) throw InvalidArgument("Dirichlet alpha must be positive");
  if (clients > labels.size()) throw InvalidArgument("more clients than samples");

  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class.at(labels[i]).push_back(i);

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> shards;
  for (std::size_t attempt = 0; attempt < kPartitionRetries; ++attempt) {
    shards.assign(clients, {});
    for (auto members : by_class) {
      if (members.empty()) continue;
      rng.shuffle(members.begin(), members.end());
      std::vector<double> logw(clients);
      for (auto& v : logw) v = rng.log_gamma_variate(alpha);
      const double peak = *std::max_element(logw.begin(), logw.end());
      double total = 0.0;
      for (auto& v : logw) total += (v = std::exp(v - peak));
      // Cumulative rounding keeps every sample assigned exactly once.
      double cumulative = 0.0;
      std::size_t start = 0;
      for (std::size_t c = 0; c < clients; ++c) {
        cumulative += logw[c] / total;
        const std::size_t end = c + 1 == clients
                                    ? members.size()
                                    : std::min(members.size(), static_cast<std::size_t>(std::llround(
                                                                   cumulative * members.size())));
        for (std::size_t i = start; i < std::max(start, end); ++i) shards[c].push_back(members[i]);
        start = std::max(start, end);
      }
    }
    if (std::none_of(shards.begin(), shards.end(), [](const auto& s) { return s.empty(); })) break;
  }
  for (auto& shard : shards) {
    if (!shard.empty()) continue;
    auto largest = std::max_element(shards.begin(), shards.end(),
                                    [](const auto& l, const auto& r) { return l.size() < r.size(); });
    shard.push_back(largest->back());
    largest->pop_back();
  }
  for (auto& shard : shards) std::sort(shard.begin(), shard.end());
  return shards;
}

inline std::vector<ml::Dataset> partition_noniid(const ml::Dataset& data, std::size_t clients,
                                                 double alpha, std::uint64_t seed) {
  const auto parts = partition_indices(data.labels, data.classes, clients, alpha, seed);
  std::vector<ml::Dataset> shards;
  shards.reserve(parts.size());
  for (const auto& idx : parts) shards.push_back(data.subset(idx));
  return shards;
}

}  // namespace adapcomfl::fl
