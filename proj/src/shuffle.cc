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

#include "sesgd/shuffle.h"

#include <algorithm>
#include <numeric>
#include <string>

#include "sesgd/core.h"

namespace sesgd {

namespace {

void check_group_shape(uint32_t n, uint32_t k) {
  if (k == 0) throw InvalidArgument("groups must be >= 1");
  if (k > n) {
    throw InvalidArgument("groups (" + std::to_string(k) +
                          ") exceed workers (" + std::to_string(n) + ")");
  }
  if (n % k != 0) {
    throw InvalidArgument("groups (" + std::to_string(k) +
                          ") must divide workers (" + std::to_string(n) + ")");
  }
}

}  // namespace

uint64_t GroupAssignment::digest() const {
  uint64_t h = 0xCBF29CE484222325ULL;
  auto mix_byte = [&h](uint8_t byte) {
    h ^= byte;
    h *= 0x100000001B3ULL;
  };
  for (const auto& group : groups) {
    for (uint32_t w : group) {
      for (int shift = 0; shift < 32; shift += 8) mix_byte((w >> shift) & 0xFF);
    }
    mix_byte(0xFF);  // group separator
  }
  return h;
}

uint64_t iteration_seed(uint64_t seed_sigma, uint64_t t) {
  return splitmix64_mix(seed_sigma ^ t);
}

GroupAssignment generate_groups(uint64_t seed_sigma, uint64_t t, uint32_t n,
                                uint32_t k) {
  check_group_shape(n, k);

  std::vector<uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  Rng64 rng(iteration_seed(seed_sigma, t));
  for (uint32_t i = n; i > 1; --i) {
    const auto j = static_cast<uint32_t>(rng.bounded(i));
    std::swap(perm[i - 1], perm[j]);
  }

  const uint32_t size = n / k;
  GroupAssignment out;
  out.iteration = t;
  out.groups.resize(k);
  for (uint32_t g = 0; g < k; ++g) {
    auto first = perm.begin() + static_cast<std::ptrdiff_t>(g * size);
    out.groups[g].assign(first, first + size);
    std::sort(out.groups[g].begin(), out.groups[g].end());
  }
  std::sort(out.groups.begin(), out.groups.end());

  out.membership.assign(n, 0);
  for (uint32_t g = 0; g < k; ++g) {
    for (uint32_t w : out.groups[g]) out.membership[w] = g;
  }
  return out;
}

double pair_split_probability(uint32_t n, uint32_t k) {
  if (n < 2) throw InvalidArgument("pair_split_probability: workers must be >= 2");
  check_group_shape(n, k);
  return static_cast<double>(n) * (k - 1) /
         (static_cast<double>(k) * (n - 1));
}

}  // namespace sesgd
