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

#ifndef SESGD_EXPERIMENT_H_
#define SESGD_EXPERIMENT_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sesgd/algorithms.h"
#include "sesgd/core.h"
#include "sesgd/models.h"
#include "sesgd/netsim.h"

namespace sesgd {

// Config is unusable: bad JSON, unknown key, or a violated precondition.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct TaskSpec {
  std::string kind = "quadratic";  // quadratic | logistic | mlp
  uint32_t dim = 2;                // features (logistic, mlp) or dimension
  uint32_t samples = 256;
  uint64_t seed = 7;
  uint32_t hidden = 16;
  uint32_t classes = 3;
  double separation = 6.0;
  std::string csv;  // logistic / mlp only: load samples from this file
};

struct SweepSpec {
  std::vector<double> latencies_s = {1e-4, 5e-4, 1e-3, 2e-3, 5e-3};
  std::vector<std::string> algorithms = {"ring-sgd", "local-sgd", "sesgd",
                                         "local-sesgd"};
};

struct IdleSpec {
  std::vector<std::string> profiles = {"resnet18-like", "densenet121-like",
                                       "vgg16-like"};
  std::vector<uint32_t> workers = {4, 16};
};

struct TheorySpec {
  double epsilon = 0.05;
  uint32_t seeds = 20;
  uint32_t probes = 32;
  double probe_radius = 1.0;
  uint64_t max_iterations = 0;
};

struct ExperimentConfig {
  std::string algorithm = "sesgd";
  TrainConfig train;
  NetworkConfig network;
  ExecutionMode execution = ExecutionMode::kLockstep;
  TaskSpec task;
  // Bundled profile name or JSON path. Empty: one tensor holding the task's
  // parameters as 64-bit floats, zero compute.
  std::string profile;
  std::string output_dir = "out";
  SweepSpec sweep;
  IdleSpec idle;
  TheorySpec theory;
};

// Strict parse: unknown keys and wrong types raise ConfigError.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

std::unique_ptr<Task> make_task(const TaskSpec& spec);
LayerProfile make_profile(const ExperimentConfig& cfg, const Task& task);

// Command-line overrides applied on top of the config file.
struct CliOverrides {
  std::optional<std::string> out_dir;
  std::optional<uint32_t> seeds;
  std::optional<uint64_t> seed;  // --seed; beats SESGD_SIM_SEED
  uint32_t parallel = 1;
};

// Reads SESGD_SIM_SEED. Precedence: flag > env > config.
void apply_overrides(ExperimentConfig& cfg, const CliOverrides& cli);

// Subcommands. Each returns the process exit code: 0 success, 1 I/O failure,
// 2 invalid config, 3 numeric failure. Errors go to `err` as one line
// starting with "error:".
int cmd_train(const std::string& config_path, const CliOverrides& cli,
              std::ostream& out, std::ostream& err);
int cmd_latency_sweep(const std::string& config_path, const CliOverrides& cli,
                      std::ostream& out, std::ostream& err);
int cmd_idle_table(const std::string& config_path, const CliOverrides& cli,
                   std::ostream& out, std::ostream& err);
int cmd_theory(const std::string& config_path, const CliOverrides& cli,
               std::ostream& out, std::ostream& err);

const char* version_string();

// CSV writers with fixed column order and %.17g numbers.
std::string trace_csv(const SimTrace& trace);

}  // namespace sesgd

#endif  // SESGD_EXPERIMENT_H_
