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

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "adapcomfl/commands.hpp"

int main(int argc, char** argv) {
  namespace cli = adapcomfl::cli;

  CLI::App app{"Bandwidth-adaptive sketch compression for federated learning: simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  auto* simulate = app.add_subcommand("simulate", "Run one experiment and write metrics");
  simulate->add_option("--config", config_path, "Experiment config (JSON)")->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();

  auto* compare = app.add_subcommand("compare", "Run FedAvg, SketchFL and AdapComFL side by side");
  compare->add_option("--config", config_path, "Experiment config (JSON)")->required();
  compare->add_option("--out", out_dir, "Output directory")->required();

  cli::GenTracesOptions gen;
  auto* traces = app.add_subcommand("gen-traces", "Write synthetic bandwidth traces as CSV");
  traces->add_option("--clients", gen.clients, "Number of clients")->required();
  traces->add_option("--duration", gen.duration_s, "Trace length in seconds")->required();
  traces->add_option("--seed", gen.seed, "RNG seed")->required();
  traces->add_option("--out", gen.out, "Output CSV path")->required();
  traces->add_option("--base", gen.base_mbps, "Base bandwidth, MB/s")->capture_default_str();
  traces->add_option("--amplitude", gen.amplitude_mbps, "Sinusoid amplitude, MB/s")
      ->capture_default_str();
  traces->add_option("--noise", gen.noise_mbps, "AR(1) noise std, MB/s")->capture_default_str();
  traces->add_option("--shift-prob", gen.shift_prob, "Per-second regime shift probability")
      ->capture_default_str();
  traces->add_option("--period", gen.period_s, "Sinusoid period, s")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (const char* env = std::getenv("ADAPCOMFL_OUT_DIR"); env != nullptr && *env != '\0') {
    out_dir = env;
  }

  if (simulate->parsed()) return cli::cmd_simulate(config_path, out_dir, std::cout, std::cerr);
  if (compare->parsed()) return cli::cmd_compare(config_path, out_dir, std::cout, std::cerr);
  return cli::cmd_gen_traces(gen, std::cout, std::cerr);
}
