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

#include "sesgd/collectives.h"

#include <cstring>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.h"

namespace sesgd {
namespace {

std::vector<std::vector<double>> raw(const std::vector<ParamVector>& xs) {
  std::vector<std::vector<double>> out;
  for (const auto& x : xs) out.push_back(x.values());
  return out;
}

std::vector<ParamVector> random_inputs(Rng64& rng, std::size_t m, std::size_t L) {
  std::vector<ParamVector> xs(m, ParamVector(L));
  for (auto& x : xs) {
    for (std::size_t i = 0; i < L; ++i) x[i] = rng.normal() * 10.0;
  }
  return xs;
}

bool bytes_equal(const ParamVector& a, const ParamVector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

TEST(SliceBoundsTest, Examples) {
  using P = std::pair<std::size_t, std::size_t>;
  EXPECT_EQ(slice_bounds(10, 2, 0), P(0, 5));
  EXPECT_EQ(slice_bounds(10, 2, 1), P(5, 10));
  const P want[] = {{0, 9}, {9, 18}, {18, 27}, {27, 37}};
  for (std::size_t s = 0; s < 4; ++s) EXPECT_EQ(slice_bounds(37, 4, s), want[s]);
  EXPECT_EQ(slice_bounds(3, 4, 0), P(0, 0));
  EXPECT_EQ(slice_bounds(3, 4, 3), P(2, 3));
  EXPECT_THROW(slice_bounds(3, 4, 4), InvalidArgument);
}

TEST(SliceBoundsTest, TilesAndBalances) {
  for (std::size_t L = 0; L < 80; ++L) {
    for (std::size_t m = 1; m <= 33; ++m) {
      std::size_t cursor = 0;
      for (std::size_t s = 0; s < m; ++s) {
        const auto [lo, hi] = slice_bounds(L, m, s);
        ASSERT_EQ(lo, cursor);
        ASSERT_LE(hi - lo, L / m + 1);
        ASSERT_GE(hi - lo, L / m);
        cursor = hi;
      }
      ASSERT_EQ(cursor, L);
    }
  }
}

TEST(RingGroupTest, SortsAndRejects) {
  RingGroup g({5, 1, 3});
  EXPECT_EQ(g.members(), (std::vector<uint32_t>{1, 3, 5}));
  EXPECT_EQ(g.successor(2), 0u);
  EXPECT_EQ(g.predecessor(0), 2u);
  EXPECT_THROW(RingGroup({}), InvalidArgument);
  EXPECT_THROW(RingGroup({1, 1}), InvalidArgument);
}

TEST(RingAllReduceTest, SingleMemberIsIdentity) {
  const std::vector<ParamVector> in{ParamVector{1.5, -2.0}};
  const auto r = ring_allreduce_mean(RingGroup({7}), in);
  EXPECT_EQ(r.outputs[0], in[0]);
  EXPECT_EQ(r.handshakes_per_member, 0u);
}

TEST(RingAllReduceTest, ThreeMembers) {
  const std::vector<ParamVector> in{ParamVector{1, 1}, ParamVector{2, 2}, ParamVector{3, 3}};
  for (auto mode : {ExecutionMode::kLockstep, ExecutionMode::kThreaded}) {
    const auto r = ring_allreduce_mean(RingGroup::global(3), in, mode);
    ASSERT_EQ(r.outputs.size(), 3u);
    for (const auto& out : r.outputs) EXPECT_EQ(out, (ParamVector{2, 2}));
    EXPECT_EQ(r.handshakes_per_member, 4u);
  }
}

TEST(RingAllReduceTest, NonDivisibleLengthMatchesSequentialMean) {
  Rng64 rng(3);
  const auto in = random_inputs(rng, 4, 37);
  const auto r = ring_allreduce_mean(RingGroup::global(4), in);
  const auto want = oracle::sequential_mean(raw(in));
  for (const auto& out : r.outputs) {
    EXPECT_LT(oracle::max_relative_error(out.values(), want), 1e-12);
  }
}

TEST(RingAllReduceTest, ShorterThanGroup) {
  Rng64 rng(4);
  const auto in = random_inputs(rng, 5, 3);
  const auto r = ring_allreduce_mean(RingGroup::global(5), in);
  const auto want = oracle::sequential_mean(raw(in));
  for (const auto& out : r.outputs) {
    EXPECT_LT(oracle::max_relative_error(out.values(), want), 1e-12);
  }
}

// The reduction order is fixed, so the result equals an independent fold in
// that order exactly, and the threaded mode reproduces it bit for bit.
TEST(RingAllReduceTest, BitExactAgainstRingOrderFoldInBothModes) {
  Rng64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = 1 + rng.bounded(12);
    const std::size_t L = rng.bounded(300);
    const auto in = random_inputs(rng, m, L);
    const auto want = L ? oracle::ring_order_mean(raw(in)) : std::vector<double>{};
    const auto lock = ring_allreduce_mean(RingGroup::global(m), in, ExecutionMode::kLockstep);
    const auto thr = ring_allreduce_mean(RingGroup::global(m), in, ExecutionMode::kThreaded);
    for (std::size_t p = 0; p < m; ++p) {
      ASSERT_TRUE(bytes_equal(lock.outputs[p], ParamVector(want)));
      ASSERT_TRUE(bytes_equal(thr.outputs[p], lock.outputs[p]));
    }
    ASSERT_EQ(lock.handshakes_per_member, 2 * (m - 1));
  }
}

TEST(RingAllReduceTest, InputValidation) {
  const std::vector<ParamVector> two{ParamVector{1}, ParamVector{1, 2}};
  EXPECT_THROW(ring_allreduce_mean(RingGroup::global(2), two), InvalidArgument);
  const std::vector<ParamVector> one{ParamVector{1}};
  EXPECT_THROW(ring_allreduce_mean(RingGroup::global(2), one), InvalidArgument);
}

}  // namespace
}  // namespace sesgd
