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

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Usage: acceptance <work-dir>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "adapcomfl/adapcomfl.hpp"
#include "adapcomfl/commands.hpp"

namespace fs = std::filesystem;
using namespace adapcomfl;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

fs::path g_work;

// Every row a truncated random permutation, so no two keys share a bucket.
sketch::HashFamily injective_family(Rng& rng, std::size_t n, std::size_t b, std::size_t rows) {
  std::vector<std::vector<std::uint32_t>> table;
  for (std::size_t u = 0; u < rows; ++u) {
    std::vector<std::uint32_t> perm(b);
    std::iota(perm.begin(), perm.end(), 0U);
    rng.shuffle(perm.begin(), perm.end());
    perm.resize(n);
    table.push_back(std::move(perm));
  }
  return sketch::HashFamily::pinned(rng.below(1u << 30), b, table);
}

std::vector<double> random_gradient(Rng& rng, std::size_t n) {
  std::vector<double> g(n);
  for (auto& x : g) x = rng.normal(0.0, std::exp(rng.uniform(-5.0, 5.0)));
  return g;
}

Outcome lossless_roundtrip() {
  Rng rng(101);
  const int trials = 2000;
  int failures = 0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng.below(64);
    const std::size_t b = n + rng.below(32);
    const std::size_t rows = 1 + rng.below(10);
    const auto family = injective_family(rng, n, b, rows);
    const auto g = random_gradient(rng, n);
    const auto s = sketch::compress(g, 1 + rng.below(rows), family, {});
    const auto agg = fl::aggregate(std::vector<sketch::AdaptiveSketch>{s});
    if (sketch::decompress(agg, family, n) != g) ++failures;
  }
  return {failures == 0, std::to_string(trials) + " trials, " + std::to_string(failures) + " mismatches"};
}

Outcome aggregation_oracle() {
  Rng rng(202);
  double worst = 0.0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng.below(64);
    const std::size_t b = n + rng.below(16);
    const std::size_t rows = 1 + rng.below(10);
    const std::size_t clients = 1 + rng.below(5);
    const auto family = injective_family(rng, n, b, rows);
    std::vector<fl::SketchUpload> uploads;
    std::vector<double> mean(n, 0.0);
    for (std::size_t c = 0; c < clients; ++c) {
      const auto g = random_gradient(rng, n);
      for (std::size_t k = 0; k < n; ++k) mean[k] += g[k] / static_cast<double>(clients);
      uploads.push_back({static_cast<ClientId>(clients - c), sketch::compress(g, rows, family, {})});
    }
    const auto got = sketch::decompress(fl::aggregate(uploads), family, n);
    for (std::size_t k = 0; k < n; ++k) {
      worst = std::max(worst, std::fabs(got[k] - mean[k]) / std::max(1.0, std::fabs(mean[k])));
    }
  }
  std::ostringstream d;
  d << trials << " trials, max error " << worst;
  return {worst <= 1e-9, d.str()};
}

Outcome fixtures() {
  const auto family = sketch::HashFamily::pinned(0, 2, {{0, 1, 0}, {1, 0, 1}});
  const auto s = sketch::compress(std::vector<double>{1, 2, 3}, 2, family, {});
  bool ok = s.cells.rows() == 2 && s.cells.cols() == 2;
  for (double c : s.cells.data()) ok = ok && c == 2.0;
  const auto g = sketch::decompress(sketch::AggregatedSketch::of(s), family, 3);
  ok = ok && g == std::vector<double>{2, 2, 2};

  sketch::AdaptiveSketch one{sketch::CellMatrix(1, 2), 0};
  one.cells(0, 0) = 1;
  one.cells(0, 1) = 2;
  sketch::AdaptiveSketch two{sketch::CellMatrix(2, 2), 0};
  two.cells(0, 0) = 3;
  two.cells(0, 1) = 4;
  two.cells(1, 0) = 5;
  two.cells(1, 1) = 6;
  const auto agg = fl::aggregate(std::vector<sketch::AdaptiveSketch>{one, two});
  const std::vector<double> want{2, 3, 5, 6};
  const bool agg_ok = std::equal(want.begin(), want.end(), agg.cells.data().begin(), agg.cells.data().end()) &&
                      agg.row_counts == std::vector<std::uint32_t>{2, 1};
  return {ok && agg_ok, std::string("compress/decompress ") + (ok ? "ok" : "wrong") + ", aggregate " +
                            (agg_ok ? "ok" : "wrong")};
}

Outcome cv_merge() {
  struct Case {
    std::vector<double> values;
    double want;
  };
  const std::vector<Case> cases{
      {{2, 2, 2}, 2},    // eta 0
      {{1, 3}, 2},       // eta exactly 0.5
      {{1, 10}, 10},     // eta above 0.5
      {{-1, 1}, 1},      // mean zero
      {{-3}, -3},        // singleton
      {{-1, -10}, -10},  // sign kept
  };
  int bad = 0;
  for (const auto& c : cases) {
    if (sketch::merge_bucket(c.values, {}) != c.want) ++bad;
  }
  return {bad == 0, std::to_string(cases.size()) + " cases, " + std::to_string(bad) + " wrong"};
}

Outcome deadline_guarantee() {
  Rng rng(505);
  int violations = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const bw::LinkModel link{0.5, std::exp(rng.uniform(-3.0, 5.0)), 32};
    const double b_true = std::exp(rng.uniform(-12.0, 4.0));
    const double b_pred = b_true * rng.uniform(0.0, 1.0);
    const auto d = bw::uplink_volume(link, b_pred);
    if (bw::uplink_time(link, d, b_true) > link.deadline_s) ++violations;
  }
  return {violations == 0, std::to_string(trials) + " triples, " + std::to_string(violations) + " violations"};
}

double classifier_fd(const ml::Architecture& arch, std::uint64_t seed) {
  Rng rng(seed);
  auto w = ml::ModelWeights::initial(arch, seed);
  for (double& v : w.values) v += rng.normal(0.0, 0.5);
  const auto d = ml::make_synthetic_dataset(seed, 40, arch.input_dims, arch.classes, 2.0);
  const auto lg = ml::loss_and_grad(w, d);
  return ml::max_relative_fd_error(
      [&](std::span<const double> x) {
        return ml::loss_and_grad({arch, std::vector<double>(x.begin(), x.end())}, d).loss;
      },
      w.values, lg.grad);
}

double lstm_fd(std::uint64_t seed) {
  bw::MiniLstm net({16, 8}, seed);
  Rng rng(seed);
  for (double& p : net.parameters()) p += rng.normal(0.0, 0.2);
  std::vector<bw::LstmWindow> windows;
  for (int w = 0; w < 5; ++w) {
    bw::LstmWindow win;
    for (int t = 0; t < 6; ++t) win.inputs.push_back(rng.normal(0.0, 0.5));
    win.target = rng.normal(0.0, 0.5);
    windows.push_back(win);
  }
  std::vector<double> grad(net.parameter_count());
  net.loss_and_grad(windows, grad);
  const std::vector<double> x0(net.parameters().begin(), net.parameters().end());
  return ml::max_relative_fd_error(
      [&](std::span<const double> x) {
        bw::MiniLstm probe = net;
        std::copy(x.begin(), x.end(), probe.parameters().begin());
        return probe.loss(windows);
      },
      x0, grad);
}

Outcome gradient_checks() {
  const double lstm = lstm_fd(61);
  const double logistic = classifier_fd({ml::ModelKind::logistic, 39, 5}, 62);
  const double mlp = classifier_fd({ml::ModelKind::mlp, 10, 5, 16}, 63);
  std::ostringstream d;
  d << "max rel error lstm " << lstm << ", logistic " << logistic << ", mlp " << mlp;
  return {lstm < 1e-4 && logistic < 1e-4 && mlp < 1e-4, d.str()};
}

sim::ExperimentConfig desk_config(std::uint64_t seed, sim::Algorithm algo) {
  sim::ExperimentConfig c;
  c.seed = seed;
  c.algorithm = algo;
  c.clients = 7;
  c.rounds = 100;
  c.sketch.columns = 64;
  c.data.alpha = 0.5;
  c.model.kind = ml::ModelKind::logistic;
  return c;
}

fs::path write_config(const std::string& name, const sim::ExperimentConfig& c) {
  fs::create_directories(g_work);
  const auto path = g_work / (name + ".json");
  std::ofstream(path) << cli::serialize_config(c);
  return path;
}

std::vector<cli::MetricsRow> simulate_to_metrics(const std::string& name, const sim::ExperimentConfig& c) {
  const auto cfg = write_config(name, c);
  const auto out = g_work / name;
  std::ostringstream sink;
  if (cli::cmd_simulate(cfg.string(), out.string(), sink, std::cerr) != cli::kExitOk) {
    throw std::runtime_error("simulate failed for " + name);
  }
  std::ifstream csv(out / "metrics.csv");
  return cli::read_metrics_csv(csv);
}

Outcome desk_convergence() {
  std::ostringstream d;
  bool fedavg_ok = true;
  bool close_ok = true;
  int beats = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double fed = sim::run_experiment(desk_config(seed, sim::Algorithm::fedavg)).summary.final_accuracy;
    const double ada = sim::run_experiment(desk_config(seed, sim::Algorithm::adapcomfl)).summary.final_accuracy;
    auto three = desk_config(seed, sim::Algorithm::sketchfl);
    three.sketch.fixed_rows = 3;
    const double sk3 = sim::run_experiment(three).summary.final_accuracy;
    fedavg_ok = fedavg_ok && fed >= 90.0;
    close_ok = close_ok && ada >= fed - 5.0;
    if (ada >= sk3) ++beats;
    d << " seed" << seed << "[fedavg " << format_double(fed) << ", adapcomfl " << format_double(ada)
      << ", sketchfl-3 " << format_double(sk3) << "]";
  }
  d << "; adapcomfl >= sketchfl-3 in " << beats << "/5";
  return {fedavg_ok && close_ok && beats >= 3, d.str().substr(1)};
}

Outcome volume_accounting() {
  const std::size_t b = 64;
  std::size_t n = 0;
  {
    sim::Simulation probe(desk_config(1, sim::Algorithm::fedavg));
    n = probe.parameter_count();
  }
  int bad = 0;
  std::size_t rows_seen = 0;
  std::size_t lo = SIZE_MAX, hi = 0;
  for (auto algo : {sim::Algorithm::adapcomfl, sim::Algorithm::fedavg, sim::Algorithm::sketchfl}) {
    const auto rows = simulate_to_metrics("volume_" + std::string(sim::to_string(algo)), desk_config(1, algo));
    rows_seen += rows.size();
    if (rows.size() != 700) ++bad;
    for (const auto& r : rows) {
      switch (algo) {
        case sim::Algorithm::adapcomfl:
          lo = std::min<std::size_t>(lo, r.d_prime_slots);
          hi = std::max<std::size_t>(hi, r.d_prime_slots);
          if (r.d_prime_slots < 3 * b || r.d_prime_slots > 10 * b) ++bad;
          break;
        case sim::Algorithm::fedavg:
          if (r.d_prime_slots != n) ++bad;
          break;
        case sim::Algorithm::sketchfl:
          if (r.d_prime_slots != 7 * b) ++bad;
          break;
      }
    }
  }
  std::ostringstream d;
  d << rows_seen << " metric rows, n=" << n << ", adapcomfl D' in [" << lo << ", " << hi << "], " << bad
    << " violations";
  return {bad == 0, d.str()};
}

// Walks a trace, predicting each sample from the ones before it.
double trace_mae(const bw::BandwidthTrace& trace, bw::PredictorState p, bool train) {
  bw::AwarenessBuffer buf(60);
  double err = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    if (buf.size() >= p.sequence_length) {
      if (train && buf.size() > p.sequence_length) p = bw::train_mini_lstm(std::move(p), buf, 2, 0.05);
      err += std::fabs(bw::predict(p, buf) - trace.bw_at(t));
      ++count;
    }
    buf.observe(trace.bw_at(t));
  }
  return err / static_cast<double>(count);
}

Outcome predictor_sanity() {
  bw::TraceParams sine;
  sine.seed = 9;
  sine.duration_s = 600;
  sine.base_bw = 0.0016;
  sine.amplitude = 0.0005;
  sine.noise_std = 0.0;
  sine.period_s = 60.0;
  const auto wave = bw::generate_trace(0, sine);
  const double ar = trace_mae(wave, bw::make_predictor(bw::PredictorKind::window_ar), false);
  const double lv = trace_mae(wave, bw::make_predictor(bw::PredictorKind::last_value), false);

  bw::TraceParams flat = sine;
  flat.amplitude = 0.0;
  const auto constant = bw::generate_trace(1, flat);
  const double c_lv = trace_mae(constant, bw::make_predictor(bw::PredictorKind::last_value), false);
  const double c_ar = trace_mae(constant, bw::make_predictor(bw::PredictorKind::window_ar), false);
  const double c_lstm =
      trace_mae(constant, bw::make_predictor(bw::PredictorKind::mini_lstm, 6, {16, 8}, 3), true);

  std::ostringstream d;
  d << "sinusoid mae window_ar " << ar << " < last_value " << lv << "; constant mae " << c_lv << ", " << c_ar
    << ", " << c_lstm;
  return {ar < lv && c_lv == 0.0 && c_ar == 0.0 && c_lstm == 0.0, d.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  auto c = desk_config(7, sim::Algorithm::adapcomfl);
  c.rounds = 20;
  const auto cfg = write_config("determinism", c);
  std::ostringstream sink;
  for (const char* run : {"determinism_a", "determinism_b"}) {
    if (cli::cmd_simulate(cfg.string(), (g_work / run).string(), sink, std::cerr) != cli::kExitOk) {
      return {false, "simulate failed"};
    }
  }
  const auto a = slurp(g_work / "determinism_a" / "metrics.csv");
  const auto b = slurp(g_work / "determinism_b" / "metrics.csv");
  return {!a.empty() && a == b, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  g_work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "adapcomfl_acceptance";
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  const std::vector<Criterion> criteria{
      {1, "lossless roundtrip", 5, lossless_roundtrip},
      {2, "aggregation oracle", 5, aggregation_oracle},
      {3, "hand-computed fixtures", 0, fixtures},
      {4, "collision merge rule", 0, cv_merge},
      {5, "deadline guarantee", 0, deadline_guarantee},
      {6, "gradient checks", 30, gradient_checks},
      {7, "desk-scale convergence", 300, desk_convergence},
      {8, "communication accounting", 0, volume_accounting},
      {9, "predictor sanity", 10, predictor_sanity},
      {10, "determinism", 0, determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += "; over time budget of " + format_double(c.budget_s) + " s";
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail
              << " [" << std::fixed << std::setprecision(2) << secs << " s]" << std::defaultfloat << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
  return failed == 0 ? 0 : 1;
}
