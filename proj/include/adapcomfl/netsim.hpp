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

// Round-driven experiment orchestration for AdapComFL and its two baselines.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "adapcomfl/aggregation.hpp"
#include "adapcomfl/bandwidth.hpp"
#include "adapcomfl/error.hpp"
#include "adapcomfl/federation.hpp"
#include "adapcomfl/mlkit.hpp"
#include "adapcomfl/predictor.hpp"
#include "adapcomfl/rng.hpp"
#include "adapcomfl/sketch.hpp"
#include "adapcomfl/trace.hpp"

namespace adapcomfl::sim {

enum class Algorithm { adapcomfl, sketchfl, fedavg };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::adapcomfl: return "adapcomfl";
    case Algorithm::sketchfl: return "sketchfl";
    case Algorithm::fedavg: return "fedavg";
  }
  return "unknown";
}

inline std::optional<Algorithm> algorithm_from_string(std::string_view name) {
  if (name == "adapcomfl") return Algorithm::adapcomfl;
  if (name == "sketchfl") return Algorithm::sketchfl;
  if (name == "fedavg") return Algorithm::fedavg;
  return std::nullopt;
}

struct SketchConfig {
  std::size_t columns = 64;
  std::size_t row_min = 3;
  std::size_t row_max = 10;
  double cv_threshold = 0.5;
  std::size_t fixed_rows = 7;
  friend bool operator==(const SketchConfig&, const SketchConfig&) = default;
};

struct PredictorConfig {
  bw::PredictorKind kind = bw::PredictorKind::mini_lstm;
  std::size_t sequence_length = 6;
  std::size_t buffer_capacity = 60;
  std::vector<std::size_t> hidden{16, 8};
  std::size_t epochs_per_round = 5;
  double lr = 0.05;
  friend bool operator==(const PredictorConfig&, const PredictorConfig&) = default;
};

struct ModelConfig {
  ml::ModelKind kind = ml::ModelKind::logistic;
  std::size_t hidden = 32;
  double lr = 0.05;
  std::size_t local_epochs = 1;
  std::size_t batch_size = 32;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct DataConfig {
  std::size_t samples = 3000;
  std::size_t dims = 39;
  std::size_t classes = 5;
  double class_separation = 3.0;
  double alpha = 0.5;
  double test_fraction = 0.2;
  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

/// Synthetic per-client traces. Client bases form a geometric ladder from
/// base_mbps / spread to base_mbps * spread; amplitude and noise are
/// fractions of each client's base.
struct SyntheticTraceConfig {
  double base_mbps = 0.0016;
  double spread = 2.0;
  double amplitude = 0.3;
  double noise = 0.05;
  double shift_prob = 0.0;
  double period_s = 600.0;
  friend bool operator==(const SyntheticTraceConfig&, const SyntheticTraceConfig&) = default;
};

struct TraceConfig {
  /// CSV trace file; empty means synthetic traces.
  std::string file;
  SyntheticTraceConfig synthetic;
  std::size_t train_seconds = 10;
  friend bool operator==(const TraceConfig&, const TraceConfig&) = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  Algorithm algorithm = Algorithm::adapcomfl;
  std::size_t clients = 7;
  std::size_t rounds = 100;
  bw::LinkModel link;
  SketchConfig sketch;
  PredictorConfig predictor;
  ModelConfig model;
  DataConfig data;
  TraceConfig traces;

  /// Every offending field as "path: reason"; empty when valid.
  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    auto need = [&](bool ok, std::string_view field, std::string_view why) {
      if (!ok) out.push_back(std::string(field) + ": " + std::string(why));
    };
    need(clients >= 1, "clients", "must be >= 1");
    need(rounds >= 1, "rounds", "must be >= 1");
    need(link.deadline_s > 0.0, "link.deadline_s", "must be > 0");
    need(link.snr >= 0.0, "link.snr", "must be >= 0");
    need(link.bits_per_value >= 1, "link.bits_per_value", "must be >= 1");
    need(sketch.columns >= 1, "sketch.columns", "must be >= 1");
    need(sketch.row_min >= 1, "sketch.row_min", "must be >= 1");
    need(sketch.row_min <= sketch.row_max, "sketch.row_max", "must be >= sketch.row_min");
    need(sketch.cv_threshold >= 0.0, "sketch.cv_threshold", "must be >= 0");
    need(sketch.fixed_rows >= 1, "sketch.fixed_rows", "must be >= 1");
    need(predictor.sequence_length >= 1, "predictor.sequence_length", "must be >= 1");
    need(predictor.buffer_capacity > predictor.sequence_length, "predictor.buffer_capacity",
         "must exceed predictor.sequence_length");
    need(!predictor.hidden.empty() &&
             std::all_of(predictor.hidden.begin(), predictor.hidden.end(),
                         [](std::size_t h) { return h > 0; }),
         "predictor.hidden", "must list positive layer widths");
    need(predictor.lr > 0.0, "predictor.lr", "must be > 0");
    need(model.lr > 0.0, "model.lr", "must be > 0");
    need(model.local_epochs >= 1, "model.local_epochs", "must be >= 1");
    need(model.kind != ml::ModelKind::mlp || model.hidden >= 1, "model.hidden", "must be >= 1");
    need(data.classes >= 2, "data.classes", "must be >= 2");
    need(data.dims >= 1, "data.dims", "must be >= 1");
    need(data.alpha > 0.0, "data.alpha", "must be > 0");
    need(data.test_fraction > 0.0 && data.test_fraction < 1.0, "data.test_fraction",
         "must be in (0, 1)");
    const auto train_samples = static_cast<std::size_t>(
        static_cast<double>(data.samples) * (1.0 - data.test_fraction));
    need(train_samples >= clients && data.samples * data.test_fraction >= 1.0, "data.samples",
         "too small for the client count and test split");
    const std::size_t need_history = predictor.kind == bw::PredictorKind::last_value
                                          ? 1
                                          : predictor.sequence_length + 1;
    need(algorithm != Algorithm::adapcomfl || traces.train_seconds >= need_history,
         "traces.train_seconds", "must cover the predictor's input window");
    need(traces.train_seconds >= 1, "traces.train_seconds", "must be >= 1");
    if (traces.file.empty()) {
      const auto& s = traces.synthetic;
      need(s.base_mbps > 0.0, "traces.synthetic.base_mbps", "must be > 0");
      need(s.spread >= 1.0, "traces.synthetic.spread", "must be >= 1");
      need(s.amplitude >= 0.0, "traces.synthetic.amplitude", "must be >= 0");
      need(s.noise >= 0.0, "traces.synthetic.noise", "must be >= 0");
      need(s.shift_prob >= 0.0 && s.shift_prob <= 1.0, "traces.synthetic.shift_prob",
           "must be in [0, 1]");
      need(s.period_s > 0.0, "traces.synthetic.period_s", "must be > 0");
    }
    return out;
  }

  void validate() const {
    const auto issues = problems();
    if (issues.empty()) return;
    std::string msg = "invalid experiment config:";
    for (const auto& p : issues) msg += "\n  " + p;
    throw ValidationError(msg);
  }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct RoundRecord {
  std::size_t round = 0;
  std::vector<fl::ClientRecord> clients;
  double global_accuracy = 0.0;
  /// Predictor MAE over every (b_pred, b_true) pair up to this round.
  double mean_mae = 0.0;
  /// Max client uplink time; local compute time is not modelled.
  double round_time = 0.0;
};

struct ExperimentSummary {
  double final_accuracy = 0.0;
  double mean_cr = 0.0;
  double mean_uplink_time = 0.0;
  double mean_volume = 0.0;
  std::size_t deadline_violations = 0;
  double predictor_mae = 0.0;

  friend bool operator==(const ExperimentSummary&, const ExperimentSummary&) = default;
};

struct ExperimentResult {
  Algorithm algorithm = Algorithm::adapcomfl;
  std::size_t model_parameters = 0;
  std::vector<RoundRecord> rounds;
  ExperimentSummary summary;
  std::vector<std::uint64_t> shard_fingerprints;
};

/// Recomputes the summary from per-round records.
inline ExperimentSummary summarize(std::span<const RoundRecord> rounds, Algorithm algorithm) {
  ExperimentSummary s;
  if (rounds.empty()) return s;
  s.final_accuracy = rounds.back().global_accuracy;
  std::size_t entries = 0;
  double abs_err = 0.0;
  for (const auto& r : rounds) {
    for (const auto& c : r.clients) {
      s.mean_cr += c.cr;
      s.mean_uplink_time += c.uplink_time;
      s.mean_volume += static_cast<double>(c.d_prime);
      if (!c.deadline_met) ++s.deadline_violations;
      abs_err += std::fabs(c.b_pred - c.b_true);
      ++entries;
    }
  }
  if (entries > 0) {
    const auto n = static_cast<double>(entries);
    s.mean_cr /= n;
    s.mean_uplink_time /= n;
    s.mean_volume /= n;
    if (algorithm == Algorithm::adapcomfl) s.predictor_mae = abs_err / n;
  }
  return s;
}

/// One configured experiment. Construction builds the data split, traces,
/// shared hash family and identically initialized clients; each run_round
/// call advances one synchronous round.
class Simulation {
 public:
  explicit Simulation(const ExperimentConfig& config) : config_(config) {
    config_.validate();
    build_data();
    build_clients();
    if (config_.algorithm != Algorithm::fedavg) {
      family_.emplace(sketch::make_hash_family(derive_seed(config_.seed, kHashStream),
                                               parameter_count(), config_.sketch.columns,
                                               max_sketch_rows()));
    }
    policy_.cv_threshold = config_.sketch.cv_threshold;
    settings_.row_min = config_.sketch.row_min;
    settings_.row_max = config_.sketch.row_max;
    settings_.fixed_rows = config_.sketch.fixed_rows;
    settings_.local_epochs = config_.model.local_epochs;
    settings_.batch_size = config_.model.batch_size;
    settings_.lr = config_.model.lr;
    settings_.train_seconds = config_.traces.train_seconds;
    settings_.predictor_epochs = config_.predictor.epochs_per_round;
    settings_.predictor_lr = config_.predictor.lr;
  }

  RoundRecord run_round() {
    if (round_ >= config_.rounds) throw std::logic_error("all configured rounds already ran");
    RoundRecord record;
    record.round = round_;
    ml::ModelWeights global;
    if (config_.algorithm == Algorithm::fedavg) {
      global = fedavg_round(record);
    } else {
      global = sketch_round(record);
    }
    for (const auto& c : record.clients) {
      record.round_time = std::max(record.round_time, c.uplink_time);
      if (config_.algorithm == Algorithm::adapcomfl) {
        mae_abs_sum_ += std::fabs(c.b_pred - c.b_true);
        ++mae_count_;
      }
    }
    record.mean_mae = mae_count_ > 0 ? mae_abs_sum_ / static_cast<double>(mae_count_) : 0.0;
    record.global_accuracy = ml::evaluate(global, test_);
    ++round_;
    return record;
  }

  std::size_t parameter_count() const { return arch_.parameter_count(); }
  std::size_t rounds_done() const noexcept { return round_; }
  const ExperimentConfig& config() const noexcept { return config_; }
  const std::vector<fl::ClientState>& clients() const noexcept { return clients_; }
  const ml::Dataset& test_set() const noexcept { return test_; }
  const std::vector<bw::BandwidthTrace>& traces() const noexcept { return traces_; }
  const std::optional<sketch::HashFamily>& hash_family() const noexcept { return family_; }

  std::vector<std::uint64_t> shard_fingerprints() const {
    std::vector<std::uint64_t> out;
    for (const auto& c : clients_) out.push_back(c.shard.fingerprint());
    return out;
  }

 private:
  static constexpr std::uint64_t kDataStream = 1;
  static constexpr std::uint64_t kSplitStream = 2;
  static constexpr std::uint64_t kPartitionStream = 3;
  static constexpr std::uint64_t kModelStream = 4;
  static constexpr std::uint64_t kHashStream = 5;
  static constexpr std::uint64_t kTraceStream = 6;
  static constexpr std::uint64_t kClientStream = 7;
  static constexpr std::uint64_t kPredictorStream = 8;

  std::size_t max_sketch_rows() const {
    return std::max(config_.sketch.row_max, config_.sketch.fixed_rows);
  }

  void build_data() {
    const auto& d = config_.data;
    auto all = ml::make_synthetic_dataset(derive_seed(config_.seed, kDataStream), d.samples,
                                          d.dims, d.classes, d.class_separation);
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config_.seed, kSplitStream));
    rng.shuffle(order.begin(), order.end());
    const auto test_count = static_cast<std::size_t>(
        std::llround(static_cast<double>(all.size()) * d.test_fraction));
    std::vector<std::size_t> test_idx(order.begin(), order.begin() + test_count);
    std::vector<std::size_t> train_idx(order.begin() + test_count, order.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    test_ = all.subset(test_idx);
    train_ = all.subset(train_idx);
    arch_ = {config_.model.kind, d.dims, d.classes, config_.model.hidden};
  }

  void build_traces() {
    const std::size_t C = config_.clients;
    if (!config_.traces.file.empty()) {
      auto loaded = bw::load_traces(config_.traces.file);
      if (loaded.size() < C) {
        throw ValidationError("trace file " + config_.traces.file + " has " +
                              std::to_string(loaded.size()) + " clients, config needs " +
                              std::to_string(C));
      }
      loaded.resize(C);
      for (const auto& t : loaded) t.validate();
      traces_ = std::move(loaded);
      return;
    }
    const auto& s = config_.traces.synthetic;
    const auto duration = static_cast<std::int64_t>(
        config_.rounds * config_.traces.train_seconds + config_.predictor.buffer_capacity + 1);
    for (std::size_t i = 0; i < C; ++i) {
      const double position = C == 1 ? 0.0 : 2.0 * static_cast<double>(i) / (C - 1) - 1.0;
      const double base = s.base_mbps * std::pow(s.spread, position);
      bw::TraceParams p;
      p.seed = derive_seed(config_.seed, kTraceStream);
      p.duration_s = duration;
      p.base_bw = base;
      p.amplitude = s.amplitude * base;
      p.noise_std = s.noise * base;
      p.regime_shift_prob = s.shift_prob;
      p.period_s = s.period_s;
      traces_.push_back(bw::generate_trace(static_cast<ClientId>(i), p));
    }
  }

  void build_clients() {
    build_traces();
    const auto shards = fl::partition_noniid(train_, config_.clients, config_.data.alpha,
                                             derive_seed(config_.seed, kPartitionStream));
    const auto w0 = ml::ModelWeights::initial(arch_, derive_seed(config_.seed, kModelStream));
    // All clients share one predictor initialization, like they share w0.
    const auto predictor = bw::make_predictor(config_.predictor.kind,
                                              config_.predictor.sequence_length,
                                              config_.predictor.hidden,
                                              derive_seed(config_.seed, kPredictorStream));
    for (std::size_t i = 0; i < config_.clients; ++i) {
      fl::ClientState c;
      c.id = static_cast<ClientId>(i);
      c.weights = w0;
      c.predictor = predictor;
      c.buffer = bw::AwarenessBuffer(config_.predictor.buffer_capacity);
      c.shard = shards[i];
      c.trace = std::make_shared<const bw::BandwidthTrace>(traces_[i]);
      c.seed = derive_seed(derive_seed(config_.seed, kClientStream), i);
      clients_.push_back(std::move(c));
    }
  }

  void check_synchrony() const {
    for (const auto& c : clients_) {
      if (c.weights.values != clients_.front().weights.values) {
        throw std::logic_error("client models diverged in round " + std::to_string(round_));
      }
    }
  }

  ml::ModelWeights sketch_round(RoundRecord& record) {
    const auto* prev = prev_agg_ ? &*prev_agg_ : nullptr;
    std::vector<fl::SketchUpload> uploads;
    for (auto& c : clients_) {
      auto out = config_.algorithm == Algorithm::adapcomfl
                     ? fl::client_round(c, prev, config_.link, *family_, policy_, settings_)
                     : fl::sketchfl_client_round(c, prev, config_.link, *family_, policy_,
                                                 settings_);
      uploads.push_back(std::move(out.upload));
      record.clients.push_back(out.record);
    }
    check_synchrony();
    prev_agg_ = fl::aggregate(uploads);
    // The model clients will hold once they apply this round's aggregate.
    auto global = clients_.front().weights;
    const auto update = sketch::decompress(*prev_agg_, *family_, global.values.size());
    for (std::size_t p = 0; p < update.size(); ++p) global.values[p] -= update[p];
    return global;
  }

  ml::ModelWeights fedavg_round(RoundRecord& record) {
    std::vector<ml::ModelWeights> local;
    std::vector<std::size_t> counts;
    for (auto& c : clients_) {
      auto out = fl::fedavg_client_round(c, config_.link, settings_);
      local.push_back(std::move(out.weights));
      counts.push_back(c.shard.size());
      record.clients.push_back(out.record);
    }
    check_synchrony();
    auto global = fl::fedavg_aggregate(local, counts);
    for (auto& c : clients_) c.weights = global;
    return global;
  }

  ExperimentConfig config_;
  ml::Architecture arch_;
  ml::Dataset train_;
  ml::Dataset test_;
  std::vector<bw::BandwidthTrace> traces_;
  std::vector<fl::ClientState> clients_;
  std::optional<sketch::HashFamily> family_;
  sketch::CollisionPolicy policy_;
  fl::RoundSettings settings_;
  std::optional<sketch::AggregatedSketch> prev_agg_;
  std::size_t round_ = 0;
  double mae_abs_sum_ = 0.0;
  std::size_t mae_count_ = 0;
};

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  Simulation sim(config);
  ExperimentResult result;
  result.algorithm = config.algorithm;
  result.model_parameters = sim.parameter_count();
  result.shard_fingerprints = sim.shard_fingerprints();
  for (std::size_t r = 0; r < config.rounds; ++r) result.rounds.push_back(sim.run_round());
  result.summary = summarize(result.rounds, config.algorithm);
  return result;
}

}  // namespace adapcomfl::sim
