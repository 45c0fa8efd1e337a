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

#include <cmath>
#include <numeric>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.h"

namespace sesgd {
namespace {

TimingModel default_timing(std::size_t dim) {
  return TimingModel(single_tensor_profile(dim * 8, 1e-3), LinkModel(NetworkConfig{}));
}

TrainConfig config(uint32_t n, uint32_t k, uint32_t b, uint64_t T, double eta,
                   uint64_t seed, uint32_t period = 1) {
  TrainConfig cfg;
  cfg.n = n;
  cfg.k = k;
  cfg.b = b;
  cfg.T = T;
  cfg.eta = eta;
  cfg.seed_sigma = seed;
  cfg.local_period = period;
  return cfg;
}

// Worst per-coordinate relative gap between two traces' worker parameters,
// replayed step by step.
double trajectory_gap(Algorithm a, Algorithm b, const TrainConfig& cfg, const Task& task) {
  const auto timing = default_timing(task.dim());
  auto sa = init_workers(task, cfg);
  auto sb = init_workers(task, cfg);
  const StepContext ctx{task, cfg, timing};
  auto step = [&](Algorithm alg, std::vector<WorkerState>& s, uint64_t t) {
    switch (alg) {
      case Algorithm::kRingSgd: return ring_sgd_step(s, ctx, t);
      case Algorithm::kLocalSgd: return local_sgd_step(s, ctx, t);
      case Algorithm::kSesgd: return sesgd_step(s, ctx, t);
      case Algorithm::kLocalSesgd: return local_sesgd_step(s, ctx, t);
    }
    return TraceRecord{};
  };
  double worst = 0.0;
  for (uint64_t t = 0; t < cfg.T; ++t) {
    step(a, sa, t);
    step(b, sb, t);
    for (std::size_t i = 0; i < sa.size(); ++i) {
      worst = std::max(worst, oracle::max_relative_error(sa[i].params.values(),
                                                         sb[i].params.values(), 1e-3));
    }
  }
  return worst;
}

TEST(InitTest, ShardsTileTheDataset) {
  auto task = make_quadratic(2, 37, 1);
  const auto states = init_workers(*task, config(5, 1, 1, 1, 0.1, 0));
  std::size_t cursor = 0;
  for (const auto& s : states) {
    EXPECT_EQ(s.shard.begin, cursor);
    EXPECT_GE(s.shard.size(), 7u);
    cursor = s.shard.end;
  }
  EXPECT_EQ(cursor, 37u);
  EXPECT_THROW(init_workers(*make_quadratic(2, 3, 1), config(4, 1, 1, 1, 0.1, 0)), InvalidArgument);
}

TEST(InitTest, MinibatchStaysInShard) {
  auto task = make_quadratic(2, 100, 1);
  auto states = init_workers(*task, config(4, 2, 1, 1, 0.1, 3));
  for (auto& s : states) {
    for (std::size_t j : draw_minibatch(s, 64)) {
      EXPECT_GE(j, s.shard.begin);
      EXPECT_LT(j, s.shard.end);
    }
  }
}

TEST(RingSgdTest, SingleWorkerIsPlainSgd) {
  auto task = make_quadratic(3, 10, 2);
  const auto cfg = config(1, 1, 2, 1, 0.1, 4);
  const auto timing = default_timing(3);
  auto states = init_workers(*task, cfg);
  auto replay = init_workers(*task, cfg);
  const auto rec = ring_sgd_step(states, StepContext{*task, cfg, timing}, 0);
  EXPECT_EQ(rec.handshakes, 0u);
  const auto idx = draw_minibatch(replay[0], 2);
  const auto want = vec_axpy(-0.1, task->grad(replay[0].params, idx), replay[0].params);
  EXPECT_EQ(states[0].params, want);
}

TEST(RingSgdTest, OpposingGradientsCancel) {
  QuadraticTask task({ParamVector{-1.0}, ParamVector{1.0}}, ParamVector{0.0});
  const auto cfg = config(2, 1, 1, 1, 0.1, 0);
  const auto timing = default_timing(1);
  auto states = init_workers(task, cfg);
  ring_sgd_step(states, StepContext{task, cfg, timing}, 0);
  for (const auto& s : states) EXPECT_EQ(s.params, ParamVector{0.0});
}

// Averaging four per-worker minibatch gradients equals one gradient over the
// pooled minibatch.
TEST(RingSgdTest, MatchesPooledBatchGradient) {
  auto task = make_logistic(4, 200, 5);
  const auto cfg = config(4, 1, 3, 1, 0.2, 8);
  const auto timing = default_timing(task->dim());
  auto states = init_workers(*task, cfg);
  auto replay = init_workers(*task, cfg);
  std::vector<std::size_t> pooled;
  for (auto& s : replay) {
    for (std::size_t j : draw_minibatch(s, 3)) pooled.push_back(j);
  }
  const ParamVector want = vec_axpy(-0.2, task->grad(replay[0].params, pooled), replay[0].params);
  ring_sgd_step(states, StepContext{*task, cfg, timing}, 0);
  for (const auto& s : states) {
    EXPECT_LT(oracle::max_relative_error(s.params.values(), want.values()), 1e-12);
  }
}

TEST(RingSgdTest, ConvergesOnStronglyConvexQuadratic) {
  // One sample per worker, so gradients are exact.
  auto task = make_quadratic(2, 2, 6);
  const auto result = run_training(Algorithm::kRingSgd, config(2, 1, 1, 500, 0.5, 1), *task,
                                   default_timing(2));
  EXPECT_LT(result.final_loss - *task->f_star(), 1e-6);
}

TEST(SesgdTest, OneGroupOneSampleEqualsRingSgd) {
  auto task = make_logistic(6, 320, 2);
  EXPECT_LT(trajectory_gap(Algorithm::kSesgd, Algorithm::kRingSgd,
                           config(8, 1, 1, 200, 0.3, 5), *task),
            1e-12);
}

TEST(SesgdTest, SingletonGroupsNeverCommunicate) {
  auto task = make_quadratic(3, 40, 2);
  const auto r = run_training(Algorithm::kSesgd, config(4, 4, 1, 20, 0.1, 3), *task,
                              default_timing(3));
  for (const auto& rec : r.trace.records) EXPECT_EQ(rec.handshakes, 0u);
  EXPECT_GT(r.trace.records.back().max_divergence, 0.0);
}

// Four workers with one sample each: worker i's staging is x - eta (x - c_i)
// and each group averages its members' staging.
TEST(SesgdTest, HandExecutedFourWorkerStep) {
  QuadraticTask task({ParamVector{1.0, 0.0}, ParamVector{0.0, 2.0}, ParamVector{-3.0, 1.0},
                      ParamVector{4.0, -4.0}},
                     ParamVector{0.5, 0.5});
  const auto cfg = config(4, 2, 1, 1, 0.1, 21);
  const auto timing = default_timing(2);
  auto states = init_workers(task, cfg);
  sesgd_step(states, StepContext{task, cfg, timing}, 0);

  const double c[4][2] = {{1, 0}, {0, 2}, {-3, 1}, {4, -4}};
  double staged[4][2];
  for (int i = 0; i < 4; ++i) {
    for (int d = 0; d < 2; ++d) staged[i][d] = 0.5 - 0.1 * (0.5 - c[i][d]);
  }
  const auto groups = generate_groups(21, 0, 4, 2);
  for (const auto& grp : groups.groups) {
    for (int d = 0; d < 2; ++d) {
      const double mean = (staged[grp[0]][d] + staged[grp[1]][d]) / 2.0;
      for (uint32_t w : grp) EXPECT_NEAR(states[w].params[d], mean, 1e-15);
    }
  }
}

// Literal inner loop: each of b gradients is taken at the iteration-start
// parameters and subtracted with weight eta / b.
TEST(SesgdTest, InnerLoopUsesIterationStartParameters) {
  auto task = make_logistic(3, 40, 3);
  const auto cfg = config(2, 2, 4, 1, 0.5, 9);
  const auto timing = default_timing(task->dim());
  auto states = init_workers(*task, cfg);
  auto replay = init_workers(*task, cfg);
  ParamVector x0 = vec_axpy(0.3, ParamVector(task->dim(), 1.0), ParamVector(task->dim()));
  for (auto& s : states) s.params = x0;
  sesgd_step(states, StepContext{*task, cfg, timing}, 0);
  for (std::size_t w = 0; w < 2; ++w) {
    ParamVector want = x0;
    for (std::size_t j : draw_minibatch(replay[w], 4)) {
      vec_axpy_inplace(-0.5 / 4, task->sample_grad_with_reg(x0, j), want);
    }
    EXPECT_LT(oracle::max_relative_error(states[w].params.values(), want.values()), 1e-14);
  }
}

TEST(LocalSgdTest, PeriodOneEqualsRingSgd) {
  auto task = make_logistic(4, 160, 4);
  EXPECT_LT(trajectory_gap(Algorithm::kLocalSgd, Algorithm::kRingSgd,
                           config(4, 1, 1, 100, 0.2, 7, 1), *task),
            1e-12);
}

TEST(LocalSgdTest, PeriodTwoHalvesHandshakes) {
  auto task = make_quadratic(3, 64, 5);
  const auto timing = default_timing(3);
  auto total = [&](Algorithm alg, uint32_t period) {
    const auto r = run_training(alg, config(8, 1, 1, 10, 0.1, 1, period), *task, timing);
    uint64_t h = 0;
    for (const auto& rec : r.trace.records) h += rec.handshakes;
    return h;
  };
  const uint64_t ring = total(Algorithm::kRingSgd, 1);
  EXPECT_EQ(ring, 10u * 2 * 7);
  EXPECT_EQ(total(Algorithm::kLocalSgd, 2) * 2, ring);
  EXPECT_EQ(total(Algorithm::kLocalSgd, 1000), 0u);
}

TEST(LocalSesgdTest, PeriodOneEqualsSesgd) {
  auto task = make_quadratic(3, 64, 5);
  const auto timing = default_timing(3);
  const auto a = run_training(Algorithm::kLocalSesgd, config(8, 2, 3, 30, 0.1, 2, 1), *task, timing);
  const auto b = run_training(Algorithm::kSesgd, config(8, 2, 3, 30, 0.1, 2, 1), *task, timing);
  EXPECT_EQ(a.trace, b.trace);
}

TEST(LocalSesgdTest, OneGroupPeriodTwoEqualsLocalSgd) {
  auto task = make_logistic(4, 160, 4);
  EXPECT_LT(trajectory_gap(Algorithm::kLocalSesgd, Algorithm::kLocalSgd,
                           config(4, 1, 1, 60, 0.2, 7, 2), *task),
            1e-12);
}

TEST(LocalSesgdTest, CountsSyncEvents) {
  auto task = make_quadratic(2, 16, 5);
  const auto r = run_training(Algorithm::kLocalSesgd, config(4, 2, 1, 4, 0.1, 2, 2), *task,
                              default_timing(2));
  int events = 0;
  for (const auto& rec : r.trace.records) events += rec.synced && rec.group_digest != 0;
  EXPECT_EQ(events, 2);
  EXPECT_FALSE(r.trace.records[0].synced);
  EXPECT_TRUE(r.trace.records[1].synced);
}

TEST(FinalAverageTest, Cases) {
  const auto timing = default_timing(1);
  std::vector<WorkerState> two(2);
  two[0].params = ParamVector{0.0};
  two[1].params = ParamVector{2.0};
  EXPECT_EQ(final_global_average(two, timing).model, ParamVector{1.0});

  std::vector<WorkerState> same(3);
  for (auto& s : same) s.params = ParamVector{0.1, 0.7};
  // 3 * 0.1 is not exact in binary, so allow one rounding step.
  const auto same_avg = final_global_average(same, timing).model;
  EXPECT_NEAR(same_avg[0], 0.1, 1e-16);
  EXPECT_NEAR(same_avg[1], 0.7, 2e-16);

  Rng64 rng(3);
  std::vector<WorkerState> many(16);
  std::vector<std::vector<double>> rows;
  for (auto& s : many) {
    s.params = ParamVector(50);
    for (std::size_t i = 0; i < 50; ++i) s.params[i] = rng.normal();
    rows.push_back(s.params.values());
  }
  const auto avg = final_global_average(many, timing, ExecutionMode::kThreaded);
  EXPECT_LT(oracle::max_relative_error(avg.model.values(), oracle::sequential_mean(rows)), 1e-12);
  for (const auto& s : many) EXPECT_EQ(s.params, avg.model);
}

TEST(RunTrainingTest, ZeroIterations) {
  auto task = make_quadratic(2, 8, 1);
  const auto r = run_training(Algorithm::kSesgd, config(4, 2, 1, 0, 0.1, 1), *task, default_timing(2));
  EXPECT_TRUE(r.trace.records.empty());
  EXPECT_EQ(r.final_model, task->initial_params());
}

TEST(RunTrainingTest, DeterministicAcrossRunsAndModes) {
  auto task = make_mlp(3, 4, 3, 64, 2);
  const auto cfg = config(8, 2, 2, 25, 0.1, 77);
  const auto timing = default_timing(task->dim());
  for (auto alg : {Algorithm::kRingSgd, Algorithm::kLocalSgd, Algorithm::kSesgd, Algorithm::kLocalSesgd}) {
    const auto a = run_training(alg, cfg, *task, timing);
    const auto b = run_training(alg, cfg, *task, timing);
    RunOptions threaded;
    threaded.mode = ExecutionMode::kThreaded;
    const auto c = run_training(alg, cfg, *task, timing, threaded);
    EXPECT_EQ(a.trace, b.trace);
    EXPECT_EQ(a.trace, c.trace);
    EXPECT_EQ(a.final_model, c.final_model);
  }
}

TEST(RunTrainingTest, ClockIsCumulative) {
  auto task = make_quadratic(2, 8, 1);
  const auto timing = default_timing(2);
  const auto r = run_training(Algorithm::kRingSgd, config(4, 1, 1, 5, 0.1, 1), *task, timing);
  const double per = timing.sync_iteration(4).elapsed;
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_NEAR(r.trace.records[t].sim_clock_s, per * (t + 1), 1e-15);
  }
}

TEST(RunTrainingTest, DivergingRunReportsNumericError) {
  auto task = make_quadratic(2, 8, 1);
  EXPECT_THROW(run_training(Algorithm::kRingSgd, config(2, 1, 1, 5000, 5.0, 1), *task,
                            default_timing(2)),
               NumericError);
}

TEST(MomentumTest, ZeroMomentumMatchesPlainRun) {
  auto task = make_quadratic(2, 16, 1);
  auto cfg = config(4, 2, 1, 20, 0.1, 3);
  const auto timing = default_timing(2);
  const auto plain = run_training(Algorithm::kSesgd, cfg, *task, timing);
  cfg.local_momentum = 0.9;
  const auto heavy = run_training(Algorithm::kSesgd, cfg, *task, timing);
  EXPECT_NE(plain.final_model, heavy.final_model);
  EXPECT_TRUE(std::isfinite(heavy.final_loss));
}

TEST(IterationCostTest, PeriodAveragesSyncAndLocal) {
  const auto timing = default_timing(1000);
  auto cfg = config(16, 4, 1, 1, 0.1, 0, 4);
  const auto ring = simulated_iteration_cost(Algorithm::kRingSgd, cfg, timing);
  EXPECT_EQ(ring.handshakes, 30.0);
  const auto ses = simulated_iteration_cost(Algorithm::kSesgd, cfg, timing);
  EXPECT_EQ(ses.handshakes, 6.0);
  const auto local = simulated_iteration_cost(Algorithm::kLocalSgd, cfg, timing);
  EXPECT_DOUBLE_EQ(local.seconds, (ring.seconds + 3 * 1e-3) / 4);
  EXPECT_EQ(simulated_iteration_cost(Algorithm::kLocalSesgd, cfg, timing).handshakes, 1.5);
}

// Ablation: exchanging gradients inside the shuffled groups instead of locally
// updated parameters lets the per-worker discrepancies persist. Parameter
// exchange keeps the workers measurably closer together.
TEST(AblationTest, GradientExchangeDivergesMore) {
  auto task = make_quadratic(4, 64, 12);
  const auto cfg = config(8, 2, 1, 300, 0.1, 4);
  const auto timing = default_timing(4);
  const auto sesgd = run_training(Algorithm::kSesgd, cfg, *task, timing);

  auto states = init_workers(*task, cfg);
  double grad_exchange = 0.0;
  double param_exchange = 0.0;
  for (uint64_t t = 0; t < cfg.T; ++t) {
    std::vector<ParamVector> g(cfg.n);
    for (uint32_t i = 0; i < cfg.n; ++i) {
      g[i] = task->grad(states[i].params, draw_minibatch(states[i], cfg.b));
    }
    for (const auto& grp : generate_groups(cfg.seed_sigma, t, cfg.n, cfg.k).groups) {
      std::vector<ParamVector> members;
      for (uint32_t w : grp) members.push_back(g[w]);
      const ParamVector avg = vec_mean(members);
      for (uint32_t w : grp) vec_axpy_inplace(-cfg.eta, avg, states[w].params);
    }
    TraceRecord rec;
    measure_workers(states, *task, rec);
    grad_exchange += rec.max_divergence;
    param_exchange += sesgd.trace.records[t].max_divergence;
  }
  EXPECT_GT(grad_exchange, 1.5 * param_exchange);
}

}  // namespace
}  // namespace sesgd
