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

#ifndef SESGD_COLLECTIVES_H_
#define SESGD_COLLECTIVES_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sesgd/core.h"

namespace sesgd {

// Workers taking part in one allreduce, in ring order (ascending id). The
// member at position p sends to position (p + 1) % size().
class RingGroup {
 public:
  // Sorts the ids; throws on an empty or duplicated list.
  explicit RingGroup(std::vector<uint32_t> members);

  static RingGroup global(uint32_t n);

  std::size_t size() const { return members_.size(); }
  const std::vector<uint32_t>& members() const { return members_; }
  std::size_t successor(std::size_t position) const {
    return (position + 1) % members_.size();
  }
  std::size_t predecessor(std::size_t position) const {
    return (position + members_.size() - 1) % members_.size();
  }

 private:
  std::vector<uint32_t> members_;
};

enum class ExecutionMode {
  kLockstep,  // all members advanced together in the calling thread
  kThreaded,  // one thread per member, FIFO channels between neighbours
};

// [start, end) of slice s when a length-L buffer is cut into m slices.
std::pair<std::size_t, std::size_t> slice_bounds(std::size_t L, std::size_t m,
                                                 std::size_t s);

struct AllReduceResult {
  std::vector<ParamVector> outputs;  // one per member, ring order
  uint64_t handshakes_per_member = 0;
};

// Scatter-reduce followed by all-gather; every member ends with the
// elementwise mean of `inputs` (inputs[p] belongs to members()[p]).
//
// Slice s is accumulated along the ring starting at position (s + 1) % m and
// finishes at position s, which divides it by m once and then circulates it.
// Both execution modes perform the same additions in the same order, so the
// results are bit-identical.
AllReduceResult ring_allreduce_mean(const RingGroup& group,
                                    std::span<const ParamVector> inputs,
                                    ExecutionMode mode = ExecutionMode::kLockstep);

}  // namespace sesgd

#endif  // SESGD_COLLECTIVES_H_
