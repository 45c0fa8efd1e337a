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

#include "sesgd/models.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.h"

namespace sesgd {
namespace {

ParamVector random_point(Rng64& rng, std::size_t dim, double scale) {
  ParamVector x(dim);
  for (std::size_t i = 0; i < dim; ++i) x[i] = scale * rng.normal();
  return x;
}

std::vector<std::size_t> all_samples(const Task& task) {
  std::vector<std::size_t> idx(task.num_samples());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

// Finite differences of the minibatch loss against the analytic minibatch
// gradient, at 10 random points.
double worst_fd_error(const Task& task, uint64_t seed, double scale, double h,
                      double floor) {
  Rng64 rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const ParamVector x = random_point(rng, task.dim(), scale);
    std::vector<std::size_t> batch;
    for (int j = 0; j < 5; ++j) batch.push_back(rng.bounded(task.num_samples()));
    const auto fd = oracle::central_difference(
        [&](const ParamVector& p) { return task.loss(p, batch); }, x, h);
    worst = std::max(worst, oracle::max_relative_error(task.grad(x, batch).values(), fd, floor));
  }
  return worst;
}

TEST(QuadraticTest, SymmetricPair) {
  QuadraticTask task({ParamVector{-1.0}, ParamVector{1.0}});
  EXPECT_EQ(*task.minimizer(), ParamVector{0.0});
  // Mean of 0.5 * (0 - c)^2 over c = -1, 1.
  EXPECT_DOUBLE_EQ(*task.f_star(), 0.5);
  EXPECT_EQ(task.full_grad(ParamVector{0.0}), ParamVector{0.0});
}

TEST(QuadraticTest, GradientAtMinimizerIsZero) {
  auto task = make_quadratic(5, 40, 3);
  const auto g = task->full_grad(*task->minimizer());
  EXPECT_LT(vec_norm(g), 1e-13);
  EXPECT_NEAR(task->full_loss(*task->minimizer()), *task->f_star(), 1e-14);
}

TEST(QuadraticTest, GradientIsXMinusBatchMean) {
  auto task = make_quadratic(3, 10, 5);
  const ParamVector x{0.3, -0.2, 2.0};
  const std::vector<std::size_t> batch{1, 4, 4};
  const auto g = task->grad(x, batch);
  for (std::size_t i = 0; i < 3; ++i) {
    const double mean_c = (task->centers()[1][i] + 2 * task->centers()[4][i]) / 3.0;
    EXPECT_NEAR(g[i], x[i] - mean_c, 1e-15);
  }
}

TEST(QuadraticTest, FiniteDifferences) {
  auto task = make_quadratic(6, 30, 1);
  EXPECT_LT(worst_fd_error(*task, 10, 2.0, 1e-5, 1e-3), 1e-6);
}

TEST(LogisticTest, ZeroWeightsGiveLogTwo) {
  auto task = make_logistic(4, 64, 2);
  const ParamVector zero(task->dim());
  EXPECT_NEAR(task->sample_loss_with_reg(zero, 5), std::log(2.0), 1e-15);
  EXPECT_NEAR(task->full_loss(zero), std::log(2.0), 1e-15);
}

TEST(LogisticTest, FiniteDifferences) {
  auto task = make_logistic(5, 200, 4);
  EXPECT_LT(worst_fd_error(*task, 11, 0.5, 1e-6, 1e-3), 1e-5);
}

TEST(LogisticTest, SeparableDataIsLearned) {
  auto task = make_logistic(4, 500, 6, 8.0);
  ParamVector x = task->initial_params();
  for (int it = 0; it < 500; ++it) vec_axpy_inplace(-1.0, task->full_grad(x), x);
  EXPECT_GE(task->accuracy(x), 0.99);
}

TEST(LogisticTest, ExtremeLogitsStayFinite) {
  Dataset d;
  d.features = {{1.0}, {-1.0}};
  d.labels = {1, 0};
  LogisticTask task(d);
  const ParamVector far{1000.0, 0.0};
  EXPECT_TRUE(std::isfinite(task.full_loss(far)));
  EXPECT_TRUE(std::isfinite(task.full_loss(ParamVector{-1000.0, 0.0})));
  EXPECT_NO_THROW(task.full_grad(ParamVector{-1000.0, 0.0}));
}

// 2-2-2 network evaluated by hand: tanh hidden layer, softmax output.
TEST(MlpTest, HandComputedForwardPass) {
  Dataset d;
  d.features = {{1.0, 2.0}};
  d.labels = {1};
  MlpTask task(d, 2, 2, 0);
  const ParamVector x{0.1, -0.2, 0.3, 0.4, 0.05, -0.05, 0.5, -0.6, 0.7, 0.8, 0.01, -0.02};
  ASSERT_EQ(task.dim(), x.size());
  const std::vector<double> input{1.0, 2.0};
  const auto probs = task.forward(x, input);
  EXPECT_NEAR(probs[0], 0.2658960556097438, 1e-15);
  EXPECT_NEAR(probs[1], 0.7341039443902563, 1e-15);
  EXPECT_NEAR(task.sample_loss_with_reg(x, 0), 0.3091046467831789, 1e-15);
}

TEST(MlpTest, FiniteDifferencesEveryWeight) {
  auto task = make_mlp(3, 5, 3, 60, 8);
  EXPECT_LT(worst_fd_error(*task, 12, 0.7, 1e-5, 1e-2), 1e-4);
}

TEST(MlpTest, HiddenPermutationLeavesLossUnchanged) {
  auto task = make_mlp(3, 4, 3, 50, 9);
  const std::size_t in = 3, h = 4, c = 3;
  Rng64 rng(1);
  const ParamVector x = random_point(rng, task->dim(), 0.5);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  ParamVector y(x.size());
  for (std::size_t j = 0; j < h; ++j) {
    for (std::size_t i = 0; i < in; ++i) y[perm[j] * in + i] = x[j * in + i];
    y[h * in + perm[j]] = x[h * in + j];
    for (std::size_t o = 0; o < c; ++o) {
      y[h * in + h + o * h + perm[j]] = x[h * in + h + o * h + j];
    }
  }
  for (std::size_t o = 0; o < c; ++o) y[h * in + h + c * h + o] = x[h * in + h + c * h + o];
  EXPECT_NEAR(task->full_loss(y), task->full_loss(x), 1e-13);
}

TEST(MlpTest, InitIsSeeded) {
  EXPECT_EQ(make_mlp(3, 4, 2, 10, 5)->initial_params(), make_mlp(3, 4, 2, 10, 5)->initial_params());
  EXPECT_NE(make_mlp(3, 4, 2, 10, 5)->initial_params(), make_mlp(3, 4, 2, 10, 6)->initial_params());
}

TEST(EstimateTest, QuadraticSmoothnessIsOne) {
  auto task = make_quadratic(4, 20, 2);
  ProbeOptions opts;
  opts.center = *task->minimizer();
  opts.radius = 0.5;
  const auto est = estimate_constants(*task, 16, 3, opts);
  EXPECT_NEAR(est.L_hat, 1.0, 1e-9);
  EXPECT_LE(est.M_hat, 0.5 + 1e-12);
}

TEST(EstimateTest, LogisticStableAcrossSeeds) {
  auto task = make_logistic(5, 300, 7);
  const auto a = estimate_constants(*task, 32, 1);
  const auto b = estimate_constants(*task, 32, 2);
  ASSERT_TRUE(std::isfinite(a.L_hat) && std::isfinite(a.M_hat));
  EXPECT_LT(std::abs(a.L_hat - b.L_hat) / a.L_hat, 0.2);
  EXPECT_LT(std::abs(a.M_hat - b.M_hat) / a.M_hat, 0.2);
}

TEST(DatasetTest, CsvWithAndWithoutHeader) {
  const auto d = parse_csv_dataset("x1,x2,y\n1,2,0\n3,4,1\n", "mem");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.feature_dim(), 2u);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1}));
  EXPECT_EQ(parse_csv_dataset("1,2,0\n", "mem").size(), 1u);
  EXPECT_THROW(parse_csv_dataset("1,2,0\n1,1\n", "mem"), InvalidArgument);
  EXPECT_THROW(parse_csv_dataset("1,2,0\n1,x,1\n", "mem"), InvalidArgument);
}

TEST(DatasetTest, LoadFromFile) {
  const std::string path = ::testing::TempDir() + "/data.csv";
  std::ofstream(path) << "0.5,1\n-0.5,0\n";
  LogisticTask task(load_csv_dataset(path));
  EXPECT_EQ(task.dim(), 2u);
  std::remove(path.c_str());
  EXPECT_THROW(load_csv_dataset("/no/such.csv"), InvalidArgument);
}

}  // namespace
}  // namespace sesgd
