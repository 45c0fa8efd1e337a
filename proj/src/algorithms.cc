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

#include "sesgd/algorithms.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace sesgd {

uint64_t worker_sample_seed(uint64_t seed_sigma, uint32_t worker) {
  return splitmix64_mix(seed_sigma ^ (static_cast<uint64_t>(worker) + 1) ^ 0xDA7A);
}

std::vector<WorkerState> init_workers(const Task& task, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t N = task.num_samples();
  if (N < cfg.n) {
    throw InvalidArgument("task has " + std::to_string(N) + " samples for " +
                          std::to_string(cfg.n) + " workers");
  }
  const ParamVector x0 = task.initial_params();
  std::vector<WorkerState> states(cfg.n);
  for (uint32_t i = 0; i < cfg.n; ++i) {
    WorkerState& s = states[i];
    s.worker = WorkerId::checked(i, cfg.n);
    s.params = x0;
    s.staging = x0;
    s.velocity = ParamVector(x0.size());
    s.shard = Shard{static_cast<std::size_t>(uint64_t(i) * N / cfg.n),
                    static_cast<std::size_t>(uint64_t(i + 1) * N / cfg.n)};
    s.sample_rng = Rng64(worker_sample_seed(cfg.seed_sigma, i));
  }
  return states;
}

std::vector<std::size_t> draw_minibatch(WorkerState& state, uint32_t b) {
  std::vector<std::size_t> idx(b);
  for (auto& j : idx) j = state.shard.begin + state.sample_rng.bounded(state.shard.size());
  return idx;
}

TimingModel::TimingModel(LayerProfile profile, LinkModel link)
    : profile_(std::move(profile)), link_(link) {
  profile_.validate();
}

const SimResult& TimingModel::sync_iteration(uint32_t group_size) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(group_size);
  if (it == cache_.end()) {
    it = cache_.emplace(group_size,
                        simulate_overlapped_iteration(profile_, group_size, link_))
             .first;
  }
  return it->second;
}

namespace {

bool is_sync_iteration(uint64_t t, uint32_t period) { return (t + 1) % period == 0; }

void begin_record(const std::vector<WorkerState>& states, const StepContext& ctx,
                  uint64_t t, TraceRecord& rec) {
  rec.t = t;
  if (ctx.record_snapshots) {
    std::vector<ParamVector> xs;
    xs.reserve(states.size());
    for (const auto& s : states) xs.push_back(s.params);
    rec.mean_before = vec_mean(xs);
  }
}

void charge(const StepContext& ctx, bool synced, uint32_t group_size,
            TraceRecord& rec) {
  rec.synced = synced;
  if (synced) {
    const SimResult& sim = ctx.timing.sync_iteration(group_size);
    rec.sim_clock_s = sim.elapsed;
    rec.handshakes = sim.stats.handshakes;
  } else {
    rec.sim_clock_s = ctx.timing.local_iteration();
    rec.handshakes = 0;
  }
}

// Minibatch gradient at the worker's current parameters.
ParamVector minibatch_grad(WorkerState& s, const StepContext& ctx) {
  const auto idx = draw_minibatch(s, ctx.cfg.b);
  return ctx.task.grad(s.params, idx);
}

// staging <- params - eta * direction, where direction is the gradient or the
// momentum buffer.
void apply_descent(WorkerState& s, const ParamVector& grad, const StepContext& ctx) {
  const ParamVector* direction = &grad;
  if (ctx.cfg.local_momentum > 0.0) {
    vec_scale_inplace(ctx.cfg.local_momentum, s.velocity);
    vec_axpy_inplace(1.0, grad, s.velocity);
    direction = &s.velocity;
  }
  s.staging = vec_axpy(-ctx.cfg.eta, *direction, s.params);
}

// Local inner loop: b samples, every gradient taken
// at the iteration-start parameters, each subtracted with weight eta / b.
// Returns the norm of the minibatch gradient.
double local_update(WorkerState& s, const StepContext& ctx) {
  if (ctx.cfg.local_momentum > 0.0) {
    const ParamVector g = minibatch_grad(s, ctx);
    apply_descent(s, g, ctx);
    return vec_norm(g);
  }
  const uint32_t b = ctx.cfg.b;
  const double step = ctx.cfg.eta / static_cast<double>(b);
  s.staging = s.params;
  ParamVector sum(s.params.size());
  for (std::size_t j : draw_minibatch(s, b)) {
    const ParamVector g = ctx.task.sample_grad_with_reg(s.params, j);
    vec_axpy_inplace(-step, g, s.staging);
    vec_axpy_inplace(1.0, g, sum);
  }
  return vec_norm(sum) / static_cast<double>(b);
}

// Average `field` of the listed workers over their ring and write the result
// to every member's params.
template <typename Field>
void group_average(std::vector<WorkerState>& states,
                   const std::vector<uint32_t>& members, Field field,
                   ExecutionMode mode) {
  const RingGroup ring(members);
  std::vector<ParamVector> inputs;
  inputs.reserve(ring.size());
  for (uint32_t w : ring.members()) inputs.push_back(states[w].*field);
  AllReduceResult out = ring_allreduce_mean(ring, inputs, mode);
  for (std::size_t p = 0; p < ring.size(); ++p) {
    states[ring.members()[p]].params = std::move(out.outputs[p]);
  }
}

void commit_staging(std::vector<WorkerState>& states) {
  for (auto& s : states) s.params = s.staging;
}

TraceRecord shuffled_group_step(std::vector<WorkerState>& states,
                                const StepContext& ctx, uint64_t t,
                                uint32_t period) {
  TraceRecord rec;
  begin_record(states, ctx, t, rec);
  for (auto& s : states) rec.max_grad_norm = std::max(rec.max_grad_norm, local_update(s, ctx));

  const bool synced = is_sync_iteration(t, period);
  if (synced) {
    const GroupAssignment groups =
        generate_groups(ctx.cfg.seed_sigma, t, ctx.cfg.n, ctx.cfg.k);
    for (const auto& members : groups.groups) {
      group_average(states, members, &WorkerState::staging, ctx.mode);
    }
    rec.group_digest = groups.digest();
  } else {
    commit_staging(states);
  }
  charge(ctx, synced, ctx.cfg.n / ctx.cfg.k, rec);
  measure_workers(states, ctx.task, rec);
  return rec;
}

}  // namespace

void measure_workers(const std::vector<WorkerState>& states, const Task& task,
                     TraceRecord& record) {
  std::vector<ParamVector> xs;
  xs.reserve(states.size());
  for (const auto& s : states) xs.push_back(s.params);
  const ParamVector mean = vec_mean(xs);
  record.loss = task.full_loss(mean);
  record.max_divergence = 0.0;
  record.max_deviation = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    record.max_deviation = std::max(record.max_deviation, vec_distance(xs[i], mean));
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      record.max_divergence = std::max(record.max_divergence, vec_distance(xs[i], xs[j]));
    }
  }
}

TraceRecord ring_sgd_step(std::vector<WorkerState>& states, const StepContext& ctx,
                          uint64_t t) {
  TraceRecord rec;
  begin_record(states, ctx, t, rec);
  std::vector<ParamVector> grads;
  grads.reserve(states.size());
  for (auto& s : states) {
    grads.push_back(minibatch_grad(s, ctx));
    rec.max_grad_norm = std::max(rec.max_grad_norm, vec_norm(grads.back()));
  }
  const RingGroup world = RingGroup::global(ctx.cfg.n);
  AllReduceResult avg = ring_allreduce_mean(world, grads, ctx.mode);
  for (std::size_t i = 0; i < states.size(); ++i) {
    apply_descent(states[i], avg.outputs[i], ctx);
  }
  commit_staging(states);
  charge(ctx, /*synced=*/true, ctx.cfg.n, rec);
  measure_workers(states, ctx.task, rec);
  return rec;
}

TraceRecord local_sgd_step(std::vector<WorkerState>& states,
                           const StepContext& ctx, uint64_t t) {
  TraceRecord rec;
  begin_record(states, ctx, t, rec);
  for (auto& s : states) {
    const ParamVector g = minibatch_grad(s, ctx);
    rec.max_grad_norm = std::max(rec.max_grad_norm, vec_norm(g));
    apply_descent(s, g, ctx);
  }
  const bool synced = is_sync_iteration(t, ctx.cfg.local_period);
  if (synced) {
    group_average(states, RingGroup::global(ctx.cfg.n).members(),
                  &WorkerState::staging, ctx.mode);
  } else {
    commit_staging(states);
  }
  charge(ctx, synced, ctx.cfg.n, rec);
  measure_workers(states, ctx.task, rec);
  return rec;
}

TraceRecord sesgd_step(std::vector<WorkerState>& states, const StepContext& ctx,
                       uint64_t t) {
  return shuffled_group_step(states, ctx, t, /*period=*/1);
}

TraceRecord local_sesgd_step(std::vector<WorkerState>& states,
                             const StepContext& ctx, uint64_t t) {
  return shuffled_group_step(states, ctx, t, ctx.cfg.local_period);
}

FinalAverage final_global_average(std::vector<WorkerState>& states,
                                  const TimingModel& timing, ExecutionMode mode) {
  if (states.empty()) throw InvalidArgument("final_global_average: no workers");
  const auto n = static_cast<uint32_t>(states.size());
  group_average(states, RingGroup::global(n).members(), &WorkerState::params, mode);
  FinalAverage out;
  out.model = states.front().params;
  // Gradients are already available, so only communication is charged.
  for (const auto& layer : timing.profile().layers) {
    out.elapsed += simulate_ring_allreduce(n, layer.param_bytes, timing.link()).elapsed;
  }
  return out;
}

TrainingResult run_training(Algorithm algorithm, const TrainConfig& cfg,
                            const Task& task, const TimingModel& timing,
                            const RunOptions& opts) {
  TrainingResult result;
  result.workers = init_workers(task, cfg);
  const StepContext ctx{task, cfg, timing, opts.mode, opts.record_snapshots};

  auto step = [&](uint64_t t) {
    switch (algorithm) {
      case Algorithm::kRingSgd:
        return ring_sgd_step(result.workers, ctx, t);
      case Algorithm::kLocalSgd:
        return local_sgd_step(result.workers, ctx, t);
      case Algorithm::kSesgd:
        return sesgd_step(result.workers, ctx, t);
      case Algorithm::kLocalSesgd:
        return local_sesgd_step(result.workers, ctx, t);
    }
    throw InvalidArgument("unknown algorithm");
  };

  double clock = 0.0;
  result.trace.records.reserve(cfg.T);
  for (uint64_t t = 0; t < cfg.T; ++t) {
    TraceRecord rec = step(t);
    clock += rec.sim_clock_s;
    rec.sim_clock_s = clock;
    if (!std::isfinite(rec.loss)) {
      throw NumericError("non-finite loss at iteration " + std::to_string(t));
    }
    result.trace.records.push_back(std::move(rec));
  }

  const FinalAverage fin = final_global_average(result.workers, timing, opts.mode);
  result.final_model = fin.model;
  result.final_sync_s = fin.elapsed;
  result.final_loss = task.full_loss(result.final_model);
  return result;
}

IterationCost simulated_iteration_cost(Algorithm algorithm, const TrainConfig& cfg,
                                       const TimingModel& timing) {
  cfg.validate();
  uint32_t group = cfg.n;
  uint32_t period = 1;
  switch (algorithm) {
    case Algorithm::kRingSgd:
      break;
    case Algorithm::kLocalSgd:
      period = cfg.local_period;
      break;
    case Algorithm::kSesgd:
      group = cfg.n / cfg.k;
      break;
    case Algorithm::kLocalSesgd:
      group = cfg.n / cfg.k;
      period = cfg.local_period;
      break;
  }
  const SimResult& sync = timing.sync_iteration(group);
  IterationCost cost;
  cost.seconds = (sync.elapsed + (period - 1) * timing.local_iteration()) / period;
  cost.handshakes = static_cast<double>(sync.stats.handshakes) / period;
  return cost;
}

}  // namespace sesgd
