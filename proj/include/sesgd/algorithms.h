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

#ifndef SESGD_ALGORITHMS_H_
#define SESGD_ALGORITHMS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "sesgd/collectives.h"
#include "sesgd/core.h"
#include "sesgd/models.h"
#include "sesgd/netsim.h"
#include "sesgd/shuffle.h"

namespace sesgd {

// Contiguous slice [begin, end) of the task's samples owned by one worker.
struct Shard {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct WorkerState {
  WorkerId worker;
  ParamVector params;   // x_{i,t}
  ParamVector staging;  // locally updated, not yet synchronized
  ParamVector velocity;  // only used with local momentum
  Shard shard;
  Rng64 sample_rng{0};
};

// Seed of worker i's private sampling stream.
uint64_t worker_sample_seed(uint64_t seed_sigma, uint32_t worker);

// n contiguous, near-equal shards. Throws if the task has fewer samples than
// workers.
std::vector<WorkerState> init_workers(const Task& task, const TrainConfig& cfg);

// b indices drawn uniformly with replacement from the worker's shard.
std::vector<std::size_t> draw_minibatch(WorkerState& state, uint32_t b);

// Charges simulated time for an iteration. Allreduce results are cached per
// group size, which is sound because the simulator is deterministic. Safe to
// share between threads.
class TimingModel {
 public:
  TimingModel(LayerProfile profile, LinkModel link);

  // Backward compute overlapped with per-layer allreduces in groups of size m.
  const SimResult& sync_iteration(uint32_t group_size) const;
  // Backward compute only.
  double local_iteration() const { return profile_.total_compute(); }

  const LayerProfile& profile() const { return profile_; }
  const LinkModel& link() const { return link_; }

 private:
  LayerProfile profile_;
  LinkModel link_;
  mutable std::mutex mu_;
  mutable std::map<uint32_t, SimResult> cache_;
};

struct TraceRecord {
  uint64_t t = 0;
  double sim_clock_s = 0.0;    // cumulative, after iteration t
  uint64_t handshakes = 0;     // per worker, this iteration
  bool synced = false;         // an allreduce happened this iteration
  uint64_t group_digest = 0;   // 0 unless a shuffled group allreduce ran
  double loss = 0.0;           // full-dataset loss at the worker mean after t
  double max_divergence = 0.0;  // max pairwise ||x_i - x_j|| after t
  double max_deviation = 0.0;   // max ||x_i - mean|| after t
  double max_grad_norm = 0.0;   // largest minibatch gradient norm this step
  // Worker mean at the start of iteration t (when snapshots are enabled).
  std::optional<ParamVector> mean_before;

  bool operator==(const TraceRecord&) const = default;
};

struct SimTrace {
  std::vector<TraceRecord> records;

  bool operator==(const SimTrace&) const = default;
};

struct StepContext {
  const Task& task;
  const TrainConfig& cfg;
  const TimingModel& timing;
  ExecutionMode mode = ExecutionMode::kLockstep;
  bool record_snapshots = false;
};

// Each step advances every worker from iteration t to t + 1 and returns the
// trace record for t with sim_clock_s holding only this iteration's time
// (run_training accumulates it).

// Gradients averaged over all n workers, then a shared SGD step.
TraceRecord ring_sgd_step(std::vector<WorkerState>& states, const StepContext& ctx,
                          uint64_t t);
// Local SGD step; global parameter average every local_period iterations.
TraceRecord local_sgd_step(std::vector<WorkerState>& states,
                           const StepContext& ctx, uint64_t t);
// Local b-sample update into staging, shuffle into k groups, average staged
// parameters within each group.
TraceRecord sesgd_step(std::vector<WorkerState>& states, const StepContext& ctx,
                       uint64_t t);
// sesgd_step whose group average fires only every local_period iterations.
TraceRecord local_sesgd_step(std::vector<WorkerState>& states,
                             const StepContext& ctx, uint64_t t);

// Global mean of the workers' parameters; every worker is left holding it.
struct FinalAverage {
  ParamVector model;
  double elapsed = 0.0;
};
FinalAverage final_global_average(std::vector<WorkerState>& states,
                                  const TimingModel& timing,
                                  ExecutionMode mode = ExecutionMode::kLockstep);

struct RunOptions {
  ExecutionMode mode = ExecutionMode::kLockstep;
  bool record_snapshots = false;
};

struct TrainingResult {
  SimTrace trace;
  ParamVector final_model;
  double final_loss = 0.0;
  double final_sync_s = 0.0;
  std::vector<WorkerState> workers;
};

TrainingResult run_training(Algorithm algorithm, const TrainConfig& cfg,
                            const Task& task, const TimingModel& timing,
                            const RunOptions& opts = {});

// Average simulated seconds and handshakes per iteration over one
// synchronization period, independent of the data.
struct IterationCost {
  double seconds = 0.0;
  double handshakes = 0.0;
};
IterationCost simulated_iteration_cost(Algorithm algorithm, const TrainConfig& cfg,
                                       const TimingModel& timing);

// Fills loss / divergence fields from the current worker parameters.
void measure_workers(const std::vector<WorkerState>& states, const Task& task,
                     TraceRecord& record);

}  // namespace sesgd

#endif  // SESGD_ALGORITHMS_H_
