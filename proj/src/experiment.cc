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

#include "sesgd/experiment.h"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "sesgd/costmodel.h"
#include "sesgd/theory.h"

namespace sesgd {

namespace {

using Json = nlohmann::json;

// Reads fields from one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    const Json& v = obj_.at(key);
    const std::string where = path_ + "." + key;
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where + ": expected a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(where + ": expected a number");
      out = v.get<double>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_unsigned()) {
        throw ConfigError(where + ": expected a non-negative integer");
      }
      const auto raw = v.get<uint64_t>();
      if (raw > std::numeric_limits<T>::max()) throw ConfigError(where + ": out of range");
      out = static_cast<T>(raw);
    } else {
      static_assert(sizeof(T) == 0, "unsupported field type");
    }
  }

  template <typename T>
  void read_list(const char* key, std::vector<T>& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    const Json& v = obj_.at(key);
    const std::string where = path_ + "." + key;
    if (!v.is_array()) throw ConfigError(where + ": expected an array");
    out.clear();
    for (const auto& item : v) {
      if constexpr (std::is_same_v<T, std::string>) {
        if (!item.is_string()) throw ConfigError(where + ": expected strings");
        out.push_back(item.get<std::string>());
      } else if constexpr (std::is_same_v<T, double>) {
        if (!item.is_number()) throw ConfigError(where + ": expected numbers");
        out.push_back(item.get<double>());
      } else {
        if (!item.is_number_unsigned()) {
          throw ConfigError(where + ": expected non-negative integers");
        }
        out.push_back(static_cast<T>(item.get<uint64_t>()));
      }
    }
  }

  std::optional<ObjectReader> child(const char* key) {
    seen_.insert(key);
    if (!obj_.contains(key)) return std::nullopt;
    return ObjectReader(obj_.at(key), path_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void validate(const ExperimentConfig& cfg) {
  parse_algorithm(cfg.algorithm);
  cfg.train.validate();
  cfg.network.validate();
  const auto& t = cfg.task;
  if (t.kind != "quadratic" && t.kind != "logistic" && t.kind != "mlp") {
    throw ConfigError("task.kind must be quadratic, logistic or mlp");
  }
  if (!t.csv.empty() && t.kind == "quadratic") {
    throw ConfigError("task.csv is only supported for logistic and mlp");
  }
  if (t.samples < cfg.train.n && t.csv.empty()) {
    throw ConfigError("task.samples must be >= workers");
  }
  for (const auto& a : cfg.sweep.algorithms) parse_algorithm(a);
  for (double tau : cfg.sweep.latencies_s) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
      throw ConfigError("sweep.latencies_s entries must be finite and >= 0");
    }
  }
  for (uint32_t n : cfg.idle.workers) {
    if (n < 1) throw ConfigError("idle.workers entries must be >= 1");
  }
  if (!(cfg.theory.epsilon > 0.0)) throw ConfigError("theory.epsilon must be > 0");
  if (cfg.theory.seeds < 1) throw ConfigError("theory.seeds must be >= 1");
  if (cfg.theory.probes < 2) throw ConfigError("theory.probes must be >= 2");
  if (!(cfg.theory.probe_radius > 0.0)) throw ConfigError("theory.probe_radius must be > 0");
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  ObjectReader root(doc, "config");
  root.read("algorithm", cfg.algorithm);
  root.read("workers", cfg.train.n);
  root.read("groups", cfg.train.k);
  root.read("batch", cfg.train.b);
  root.read("iterations", cfg.train.T);
  root.read("lr", cfg.train.eta);
  root.read("seed", cfg.train.seed_sigma);
  root.read("local_period", cfg.train.local_period);
  root.read("local_momentum", cfg.train.local_momentum);
  std::string execution = "lockstep";
  root.read("execution", execution);
  if (execution == "lockstep") {
    cfg.execution = ExecutionMode::kLockstep;
  } else if (execution == "threaded") {
    cfg.execution = ExecutionMode::kThreaded;
  } else {
    throw ConfigError("config.execution must be lockstep or threaded");
  }
  root.read("profile", cfg.profile);
  root.read("output_dir", cfg.output_dir);

  if (auto net = root.child("network")) {
    net->read("bandwidth_Bps", cfg.network.bandwidth_nu);
    net->read("latency_s", cfg.network.latency_tau);
    net->finish();
  }
  if (auto task = root.child("task")) {
    task->read("kind", cfg.task.kind);
    task->read("dim", cfg.task.dim);
    task->read("samples", cfg.task.samples);
    task->read("seed", cfg.task.seed);
    task->read("hidden", cfg.task.hidden);
    task->read("classes", cfg.task.classes);
    task->read("separation", cfg.task.separation);
    task->read("csv", cfg.task.csv);
    task->finish();
  }
  if (auto sweep = root.child("sweep")) {
    sweep->read_list("latencies_s", cfg.sweep.latencies_s);
    sweep->read_list("algorithms", cfg.sweep.algorithms);
    sweep->finish();
  }
  if (auto idle = root.child("idle")) {
    idle->read_list("profiles", cfg.idle.profiles);
    idle->read_list("workers", cfg.idle.workers);
    idle->finish();
  }
  if (auto theory = root.child("theory")) {
    theory->read("epsilon", cfg.theory.epsilon);
    theory->read("seeds", cfg.theory.seeds);
    theory->read("probes", cfg.theory.probes);
    theory->read("probe_radius", cfg.theory.probe_radius);
    theory->read("max_iterations", cfg.theory.max_iterations);
    theory->finish();
  }
  root.finish();

  try {
    validate(cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

std::unique_ptr<Task> make_task(const TaskSpec& spec) {
  if (spec.kind == "quadratic") return make_quadratic(spec.dim, spec.samples, spec.seed);
  if (spec.kind == "logistic") {
    if (!spec.csv.empty()) return std::make_unique<LogisticTask>(load_csv_dataset(spec.csv));
    return make_logistic(spec.dim, spec.samples, spec.seed, spec.separation);
  }
  if (spec.kind == "mlp") {
    if (!spec.csv.empty()) {
      Dataset data = load_csv_dataset(spec.csv);
      const auto classes = static_cast<std::size_t>(
          std::max<int>(data.num_classes(), static_cast<int>(spec.classes)));
      return std::make_unique<MlpTask>(std::move(data), spec.hidden, classes, spec.seed);
    }
    return make_mlp(spec.dim, spec.hidden, spec.classes, spec.samples, spec.seed);
  }
  throw ConfigError("unknown task kind '" + spec.kind + "'");
}

LayerProfile make_profile(const ExperimentConfig& cfg, const Task& task) {
  if (cfg.profile.empty()) return single_tensor_profile(task.dim() * sizeof(double));
  return resolve_layer_profile(cfg.profile);
}

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& cli) {
  if (cli.out_dir) cfg.output_dir = *cli.out_dir;
  if (cli.seeds) {
    if (*cli.seeds < 1) throw ConfigError("--seeds must be >= 1");
    cfg.theory.seeds = *cli.seeds;
  }
  if (cli.seed) {
    cfg.train.seed_sigma = *cli.seed;
  } else if (const char* env = std::getenv("SESGD_SIM_SEED"); env && *env) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || errno != 0 || env[0] == '-') {
      throw ConfigError(std::string("SESGD_SIM_SEED is not an unsigned integer: '") +
                        env + "'");
    }
    cfg.train.seed_sigma = v;
  }
  if (cli.parallel < 1) throw ConfigError("--parallel must be >= 1");
}

const char* version_string() { return "sesgd 0.1.0"; }

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::filesystem::path prepare_output(const ExperimentConfig& cfg) {
  std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

// Runs fn(0..count-1) over `threads` threads; each call owns its own output
// slot so the schedule cannot change results.
template <typename Fn>
void parallel_for(std::size_t count, uint32_t threads, Fn fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, count));
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Maps exceptions onto exit codes and the single-line error format.
template <typename Body>
int guarded(std::ostream& err, Body body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    err << "error: numeric: " << e.what() << "\n";
    return 3;
  } catch (const InvalidArgument& e) {
    err << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: io: " << e.what() << "\n";
    return 1;
  }
}

ExperimentConfig load_with_overrides(const std::string& path, const CliOverrides& cli) {
  ExperimentConfig cfg = load_experiment_config(path);
  apply_overrides(cfg, cli);
  return cfg;
}

std::string final_model_json(const ExperimentConfig& cfg, const TrainingResult& res) {
  nlohmann::ordered_json doc;
  doc["algorithm"] = cfg.algorithm;
  doc["seed"] = cfg.train.seed_sigma;
  doc["iterations"] = cfg.train.T;
  doc["final_loss"] = res.final_loss;
  doc["sim_time_s"] =
      (res.trace.records.empty() ? 0.0 : res.trace.records.back().sim_clock_s) +
      res.final_sync_s;
  doc["params"] = res.final_model.values();
  return doc.dump(2) + "\n";
}

}  // namespace

std::string trace_csv(const SimTrace& trace) {
  std::string out = "iter,sim_time_s,handshakes,loss,max_divergence\n";
  for (const auto& r : trace.records) {
    out += std::to_string(r.t) + "," + fmt_double(r.sim_clock_s) + "," +
           std::to_string(r.handshakes) + "," + fmt_double(r.loss) + "," +
           fmt_double(r.max_divergence) + "\n";
  }
  return out;
}

int cmd_train(const std::string& config_path, const CliOverrides& cli,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_with_overrides(config_path, cli);
    const auto task = make_task(cfg.task);
    const TimingModel timing(make_profile(cfg, *task), LinkModel(cfg.network));
    const Algorithm algorithm = parse_algorithm(cfg.algorithm);
    const uint32_t seeds = cli.seeds.value_or(1);
    if (seeds < 1) throw ConfigError("--seeds must be >= 1");

    std::vector<TrainingResult> results(seeds);
    parallel_for(seeds, cli.parallel, [&](std::size_t i) {
      TrainConfig train = cfg.train;
      train.seed_sigma = cfg.train.seed_sigma + i;
      RunOptions opts;
      opts.mode = cfg.execution;
      results[i] = run_training(algorithm, train, *task, timing, opts);
    });

    const auto dir = prepare_output(cfg);
    for (uint32_t i = 0; i < seeds; ++i) {
      ExperimentConfig seeded = cfg;
      seeded.train.seed_sigma = cfg.train.seed_sigma + i;
      const std::string suffix =
          seeds == 1 ? "" : "_seed" + std::to_string(seeded.train.seed_sigma);
      write_file(dir / ("trace" + suffix + ".csv"), trace_csv(results[i].trace));
      write_file(dir / ("final_model" + suffix + ".json"),
                 final_model_json(seeded, results[i]));
      out << cfg.algorithm << " seed=" << seeded.train.seed_sigma
          << " final_loss=" << fmt_double(results[i].final_loss) << "\n";
    }
    return 0;
  });
}

int cmd_latency_sweep(const std::string& config_path, const CliOverrides& cli,
                      std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_with_overrides(config_path, cli);
    const auto task = make_task(cfg.task);
    const LayerProfile profile = make_profile(cfg, *task);

    struct Cell {
      double tau;
      Algorithm algorithm;
      IterationCost sim;
      double predicted = 0.0;
    };
    std::vector<Cell> cells;
    for (double tau : cfg.sweep.latencies_s) {
      for (const auto& name : cfg.sweep.algorithms) {
        cells.push_back(Cell{tau, parse_algorithm(name), {}, 0.0});
      }
    }

    parallel_for(cells.size(), cli.parallel, [&](std::size_t i) {
      Cell& c = cells[i];
      NetworkConfig net = cfg.network;
      net.latency_tau = c.tau;
      const TimingModel timing(profile, LinkModel(net));
      c.sim = simulated_iteration_cost(c.algorithm, cfg.train, timing);
      const bool grouped =
          c.algorithm == Algorithm::kSesgd || c.algorithm == Algorithm::kLocalSesgd;
      const bool periodic =
          c.algorithm == Algorithm::kLocalSgd || c.algorithm == Algorithm::kLocalSesgd;
      const uint32_t m = grouped ? cfg.train.n / cfg.train.k : cfg.train.n;
      const uint32_t period = periodic ? cfg.train.local_period : 1;
      const double sync = non_overlapped_iteration_time(profile, m, net);
      c.predicted = (sync + (period - 1) * profile.total_compute()) / period;
    });

    const auto dir = prepare_output(cfg);
    std::string csv = "tau_s,algorithm,sim_iter_time_s,handshakes,model_iter_time_s\n";
    for (const auto& c : cells) {
      csv += fmt_double(c.tau) + "," + algorithm_name(c.algorithm) + "," +
             fmt_double(c.sim.seconds) + "," + fmt_double(c.sim.handshakes) + "," +
             fmt_double(c.predicted) + "\n";
    }
    write_file(dir / "sweep.csv", csv);
    out << "wrote " << (dir / "sweep.csv").string() << " (" << cells.size() << " rows)\n";
    return 0;
  });
}

int cmd_idle_table(const std::string& config_path, const CliOverrides& cli,
                   std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_with_overrides(config_path, cli);
    std::vector<LayerProfile> profiles;
    for (const auto& name : cfg.idle.profiles) profiles.push_back(resolve_layer_profile(name));
    const auto rows = idle_table(profiles, cfg.idle.workers, LinkModel(cfg.network));

    const auto dir = prepare_output(cfg);
    std::string csv = "model,workers,idle_s,proportion\n";
    for (const auto& r : rows) {
      csv += r.model + "," + std::to_string(r.workers) + "," + fmt_double(r.idle_s) +
             "," + fmt_double(r.proportion) + "\n";
    }
    write_file(dir / "idle.csv", csv);
    out << "wrote " << (dir / "idle.csv").string() << " (" << rows.size() << " rows)\n";
    return 0;
  });
}

int cmd_theory(const std::string& config_path, const CliOverrides& cli,
               std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_with_overrides(config_path, cli);
    if (cfg.train.k >= cfg.train.n) {
      throw ConfigError("theory requires groups < workers");
    }
    const auto task = make_task(cfg.task);
    const TimingModel timing(make_profile(cfg, *task), LinkModel(cfg.network));
    CampaignOptions opts;
    opts.epsilon = cfg.theory.epsilon;
    opts.seeds = cfg.theory.seeds;
    opts.base_seed = cfg.train.seed_sigma;
    opts.probes = cfg.theory.probes;
    opts.probe_radius = cfg.theory.probe_radius;
    opts.b = cfg.train.b;
    opts.max_iterations = cfg.theory.max_iterations;
    opts.parallel = cli.parallel;
    const CampaignReport report =
        run_theory_campaign(*task, cfg.train.n, cfg.train.k, timing, opts);

    const auto dir = prepare_output(cfg);
    write_file(dir / "theory_report.json", theory_report_json(report));
    out << "lhs=" << fmt_double(report.lhs) << " rhs=" << fmt_double(report.rhs)
        << " holds=" << (report.holds ? "true" : "false") << " T=" << report.T << "\n";
    return 0;
  });
}

}  // namespace sesgd
