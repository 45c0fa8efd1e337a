// Copyright 2026 The SESGD Authors. All Rights Reserved.
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

// Experiment runner: train, latency-sweep, idle-table, theory, version.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "sesgd/experiment.h"

int main(int argc, char** argv) {
  CLI::App app{"Shuffle-Exchange SGD simulator and experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<uint32_t> seeds;
  std::optional<uint64_t> seed;
  uint32_t parallel = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON experiment config")->required();
    cmd->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    cmd->add_option("--seeds", seeds, "Number of seeds to run");
    cmd->add_option("--seed", seed, "Base seed (overrides SESGD_SIM_SEED and config)");
    cmd->add_option("--parallel", parallel, "Independent cells to run concurrently")
        ->check(CLI::PositiveNumber);
  };

  auto* train = app.add_subcommand("train", "Run one training experiment");
  auto* sweep = app.add_subcommand("latency-sweep", "Per-iteration time over latencies");
  auto* idle = app.add_subcommand("idle-table", "Idle time share per profile and world size");
  auto* theory = app.add_subcommand("theory", "Check the convergence bounds empirically");
  auto* version = app.add_subcommand("version", "Print the version");
  for (auto* cmd : {train, sweep, idle, theory}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  if (version->parsed()) {
    std::cout << sesgd::version_string() << "\n";
    return 0;
  }

  sesgd::CliOverrides cli;
  cli.out_dir = out_dir;
  cli.seeds = seeds;
  cli.seed = seed;
  cli.parallel = parallel;

  if (train->parsed()) return sesgd::cmd_train(config_path, cli, std::cout, std::cerr);
  if (sweep->parsed()) {
    return sesgd::cmd_latency_sweep(config_path, cli, std::cout, std::cerr);
  }
  if (idle->parsed()) return sesgd::cmd_idle_table(config_path, cli, std::cout, std::cerr);
  if (theory->parsed()) return sesgd::cmd_theory(config_path, cli, std::cout, std::cerr);
  return 2;
}
