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

#ifndef SESGD_SHUFFLE_H_
#define SESGD_SHUFFLE_H_

#include <cstdint>
#include <vector>

namespace sesgd {

// Partition of n workers into k equal groups for one iteration.
//
// Canonical form: each group is sorted ascending and groups are ordered by
// their smallest member, so two workers that compute the assignment
// independently get identical objects.
struct GroupAssignment {
  uint64_t iteration = 0;
  std::vector<uint32_t> membership;           // worker -> group index
  std::vector<std::vector<uint32_t>> groups;  // k lists of n / k workers

  const std::vector<uint32_t>& group_of(uint32_t worker) const {
    return groups[membership[worker]];
  }

  // FNV-1a over the canonical group lists.
  uint64_t digest() const;

  bool operator==(const GroupAssignment&) const = default;
};

// Seed used to shuffle iteration t. Random access: no dependence on t - 1.
uint64_t iteration_seed(uint64_t seed_sigma, uint64_t t);

// Fisher-Yates shuffle of [0, n) seeded by iteration_seed, cut into k
// contiguous slices. Throws if k == 0, k > n, or k does not divide n.
GroupAssignment generate_groups(uint64_t seed_sigma, uint64_t t, uint32_t n,
                                uint32_t k);

// Probability that two fixed distinct workers land in different groups under a
// uniform equal-size partition: n(k-1) / (k(n-1)).
double pair_split_probability(uint32_t n, uint32_t k);

}  // namespace sesgd

#endif  // SESGD_SHUFFLE_H_
