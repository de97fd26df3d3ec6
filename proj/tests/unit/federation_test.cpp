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

#include <gtest/gtest.h>

#include <map>
#include <memory>

#include "adapcomfl/federation.hpp"
#include "test_util.hpp"

namespace adapcomfl::fl {
namespace {

const bw::LinkModel kLink{0.5, 3.0, 32};

std::shared_ptr<const bw::BandwidthTrace> constant_trace(ClientId id, double value, std::size_t len = 100) {
  bw::BandwidthTrace t;
  t.client_id = id;
  for (std::size_t s = 0; s < len; ++s) t.samples.push_back({static_cast<std::int64_t>(s), value});
  return std::make_shared<const bw::BandwidthTrace>(std::move(t));
}

// One-feature, two-class client: n = 4 parameters.
ClientState micro_client(double bandwidth, bw::PredictorKind kind = bw::PredictorKind::last_value) {
  ClientState c;
  c.id = 0;
  c.weights = ml::ModelWeights::initial({ml::ModelKind::logistic, 1, 2}, 0);
  c.predictor = bw::make_predictor(kind, 6, {4, 2}, 1);
  c.shard = ml::Dataset{1, 2, {1.0, 2.0, -1.0, -0.5, 0.7}, {0, 0, 1, 1, 0}};
  c.trace = constant_trace(0, bandwidth);
  c.seed = 99;
  return c;
}

const auto kMicroFamily = test::injective_family(5, 4, 4, 10);

TEST(ClientRound, FirstRoundKeepsStartingWeights) {
  auto c = micro_client(0.0001);
  const auto w0 = c.weights;
  const auto out = client_round(c, nullptr, kLink, kMicroFamily, {}, RoundSettings{});
  EXPECT_EQ(c.weights, w0);
  EXPECT_EQ(c.trace_cursor, 10u);
  EXPECT_EQ(c.buffer.size(), 10u);
  EXPECT_EQ(c.rounds_done, 1u);
  EXPECT_EQ(out.upload.client_id, 0u);
}

TEST(ClientRound, ZeroAggregateIsIdentity) {
  auto c = micro_client(0.0001);
  const auto w0 = c.weights;
  sketch::AggregatedSketch zero{sketch::CellMatrix(4, 4), {1, 1, 1, 1}, kMicroFamily.seed()};
  client_round(c, &zero, kLink, kMicroFamily, {}, RoundSettings{});
  EXPECT_EQ(c.weights, w0);
}

TEST(ClientRound, MicroFixtureReplay) {
  // 0.0001 MB/s over 0.5 s at SNR 3 and 32-bit slots is 25 slots: 6 rows of 4.
  auto c = micro_client(0.0001);
  const auto w0 = c.weights;
  const auto out = client_round(c, nullptr, kLink, kMicroFamily, {}, RoundSettings{});
  EXPECT_EQ(out.record.b_pred, 0.0001);
  EXPECT_EQ(out.record.b_true, 0.0001);
  EXPECT_EQ(out.record.rows, 6u);
  EXPECT_EQ(out.record.d_prime, 24u);
  EXPECT_DOUBLE_EQ(out.record.cr, 6.0);
  EXPECT_TRUE(out.record.deadline_met);
  EXPECT_LE(out.record.uplink_time, kLink.deadline_s);

  // Independent replay of local training from the same shuffle seed.
  Rng rng(derive_seed(99, 0));
  const auto trained = ml::train_local(w0, c.shard, 1, 32, 0.05, rng);
  ASSERT_EQ(out.gradient.size(), 4u);
  for (std::size_t p = 0; p < 4; ++p) EXPECT_EQ(out.gradient[p], w0.values[p] - trained.values[p]);

  // Injective rows make the sketch lossless, so applying it reproduces the
  // trained model at the start of the next round.
  const auto agg = aggregate(std::vector<SketchUpload>{out.upload});
  EXPECT_EQ(sketch::decompress(agg, kMicroFamily, 4), out.gradient);
  client_round(c, &agg, kLink, kMicroFamily, {}, RoundSettings{});
  for (std::size_t p = 0; p < 4; ++p) EXPECT_DOUBLE_EQ(c.weights.values[p], trained.values[p]);
}

TEST(ClientRound, RejectsMismatchedFamily) {
  auto c = micro_client(0.0001);
  const auto wrong = test::injective_family(5, 3, 4, 10);
  EXPECT_THROW(client_round(c, nullptr, kLink, wrong, {}, RoundSettings{}), InvalidArgument);
  auto no_trace = micro_client(0.0001);
  no_trace.trace.reset();
  EXPECT_THROW(client_round(no_trace, nullptr, kLink, kMicroFamily, {}, RoundSettings{}),
               InvalidArgument);
}

TEST(ClientRound, ClampsToRowBounds) {
  auto slow = micro_client(1e-9);
  EXPECT_EQ(client_round(slow, nullptr, kLink, kMicroFamily, {}, RoundSettings{}).record.rows, 3u);
  auto fast = micro_client(10.0);
  EXPECT_EQ(client_round(fast, nullptr, kLink, kMicroFamily, {}, RoundSettings{}).record.rows, 10u);
}

TEST(ClientRound, LstmPredictorRuns) {
  auto c = micro_client(0.0001, bw::PredictorKind::mini_lstm);
  const auto before = c.predictor;
  const auto out = client_round(c, nullptr, kLink, kMicroFamily, {}, RoundSettings{});
  // Constant bandwidth is a fixed point of the predictor.
  EXPECT_EQ(out.record.b_pred, 0.0001);
  EXPECT_EQ(c.predictor, before);
}

TEST(SketchFl, AlwaysFixedRows) {
  for (double bw : {1e-9, 0.0001, 10.0}) {
    auto c = micro_client(bw);
    const auto out = sketchfl_client_round(c, nullptr, kLink, kMicroFamily, {}, RoundSettings{});
    EXPECT_EQ(out.record.rows, 7u);
    EXPECT_EQ(out.record.b_pred, 0.0);
    EXPECT_EQ(out.record.d_prime, 28u);
  }
}

TEST(SketchFl, MatchesAdaptiveWhenSevenRowsChosen) {
  // 0.00012 MB/s gives 30 slots, 7 rows of 4.
  auto a = micro_client(0.00012);
  auto s = micro_client(0.00012);
  const auto ao = client_round(a, nullptr, kLink, kMicroFamily, {}, RoundSettings{});
  const auto so = sketchfl_client_round(s, nullptr, kLink, kMicroFamily, {}, RoundSettings{});
  ASSERT_EQ(ao.record.rows, 7u);
  EXPECT_EQ(ao.upload.sketch, so.upload.sketch);
  EXPECT_EQ(ao.gradient, so.gradient);
}

TEST(FedAvg, ClientRoundReportsFullModel) {
  auto c = micro_client(0.0001);
  const auto out = fedavg_client_round(c, kLink, RoundSettings{});
  EXPECT_EQ(out.record.cr, 1.0);
  EXPECT_EQ(out.record.d_prime, 4u);
  EXPECT_EQ(out.record.rows, 0u);
  EXPECT_NE(out.weights, c.weights);
}

ml::ModelWeights flat(std::vector<double> v) {
  return {{ml::ModelKind::logistic, 1, 2}, std::move(v)};
}

TEST(FedAvg, WeightedMeanExamples) {
  const std::vector<ml::ModelWeights> ws{flat({1, 1, 1, 1}), flat({3, 3, 3, 3})};
  const std::vector<std::size_t> equal{1, 1};
  EXPECT_EQ(fedavg_aggregate(ws, equal).values, (std::vector<double>{2, 2, 2, 2}));
  const std::vector<ml::ModelWeights> ws2{flat({0, 0, 0, 0}), flat({4, 4, 4, 4})};
  const std::vector<std::size_t> skew{1, 3};
  EXPECT_EQ(fedavg_aggregate(ws2, skew).values, (std::vector<double>{3, 3, 3, 3}));
}

TEST(FedAvg, ResultInConvexHull) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.below(6);
    std::vector<ml::ModelWeights> ws;
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < k; ++i) {
      ws.push_back(flat(test::random_vector(rng, 4, 3.0)));
      counts.push_back(1 + rng.below(100));
    }
    const auto avg = fedavg_aggregate(ws, counts);
    for (std::size_t p = 0; p < 4; ++p) {
      double lo = ws[0].values[p], hi = lo;
      for (const auto& w : ws) {
        lo = std::min(lo, w.values[p]);
        hi = std::max(hi, w.values[p]);
      }
      EXPECT_GE(avg.values[p], lo - 1e-12);
      EXPECT_LE(avg.values[p], hi + 1e-12);
    }
  }
}

TEST(FedAvg, Errors) {
  const std::vector<ml::ModelWeights> ws{flat({1, 1, 1, 1})};
  EXPECT_THROW(fedavg_aggregate(ws, std::vector<std::size_t>{}), InvalidArgument);
  EXPECT_THROW(fedavg_aggregate(ws, std::vector<std::size_t>{0}), InvalidArgument);
}

std::vector<std::uint32_t> balanced_labels(std::size_t per_class, std::size_t classes) {
  std::vector<std::uint32_t> labels;
  for (std::size_t i = 0; i < per_class * classes; ++i) labels.push_back(static_cast<std::uint32_t>(i % classes));
  return labels;
}

TEST(Partition, HugeAlphaIsNearIid) {
  const auto labels = balanced_labels(2000, 5);
  const auto shards = partition_indices(labels, 5, 5, 1e6, 17);
  for (const auto& shard : shards) {
    std::vector<double> hist(5);
    for (auto i : shard) hist[labels[i]] += 1.0;
    for (double h : hist) EXPECT_NEAR(h / shard.size(), 0.2, 0.02);
  }
}

TEST(Partition, TinyAlphaIsSkewed) {
  const auto labels = balanced_labels(200, 5);
  const auto shards = partition_indices(labels, 5, 7, 0.01, 17);
  double best = 0.0;
  for (const auto& shard : shards) {
    std::vector<double> hist(5);
    for (auto i : shard) hist[labels[i]] += 1.0;
    best = std::max(best, *std::max_element(hist.begin(), hist.end()) / shard.size());
  }
  EXPECT_GE(best, 0.8);
}

TEST(Partition, ExactNonEmptyPartition) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t classes = 2 + rng.below(5);
    const std::size_t clients = 1 + rng.below(10);
    const auto labels = balanced_labels(5 + rng.below(30), classes);
    const double alpha = std::exp(rng.uniform(-4.0, 4.0));
    const auto shards = partition_indices(labels, classes, clients, alpha, trial);
    ASSERT_EQ(shards.size(), clients);
    std::vector<int> seen(labels.size());
    for (const auto& s : shards) {
      EXPECT_FALSE(s.empty());
      for (auto i : s) ++seen[i];
    }
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST(Partition, DeterministicAndValidated) {
  const auto data = ml::make_synthetic_dataset(1, 300, 3, 3, 2.0);
  const auto a = partition_noniid(data, 4, 0.5, 8);
  const auto b = partition_noniid(data, 4, 0.5, 8);
  EXPECT_EQ(a, b);
  std::size_t total = 0;
  for (const auto& s : a) total += s.size();
  EXPECT_EQ(total, 300u);
  EXPECT_THROW(partition_noniid(data, 0, 0.5, 8), InvalidArgument);
  EXPECT_THROW(partition_noniid(data, 4, 0.0, 8), InvalidArgument);
  EXPECT_THROW(partition_noniid(data, 301, 0.5, 8), InvalidArgument);
}

}  // namespace
}  // namespace adapcomfl::fl
