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

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace sesgd {

RingGroup::RingGroup(std::vector<uint32_t> members)
    : members_(std::move(members)) {
  if (members_.empty()) throw InvalidArgument("ring group must not be empty");
  std::sort(members_.begin(), members_.end());
  if (std::adjacent_find(members_.begin(), members_.end()) != members_.end()) {
    throw InvalidArgument("ring group members must be distinct");
  }
}

RingGroup RingGroup::global(uint32_t n) {
  std::vector<uint32_t> ids(n);
  for (uint32_t i = 0; i < n; ++i) ids[i] = i;
  return RingGroup(std::move(ids));
}

std::pair<std::size_t, std::size_t> slice_bounds(std::size_t L, std::size_t m,
                                                 std::size_t s) {
  if (m == 0 || s >= m) {
    throw InvalidArgument("slice_bounds: slice " + std::to_string(s) +
                          " out of range for " + std::to_string(m) + " slices");
  }
  using Wide = unsigned __int128;
  const auto start = static_cast<std::size_t>(Wide(s) * L / m);
  const auto end = static_cast<std::size_t>(Wide(s + 1) * L / m);
  return {start, end};
}

namespace {

using Slice = std::vector<double>;

// Single-producer single-consumer FIFO.
class Channel {
 public:
  void send(Slice msg) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      queue_.push_back(std::move(msg));
    }
    cv_.notify_one();
  }

  Slice receive() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [this] { return !queue_.empty(); });
    Slice msg = std::move(queue_.front());
    queue_.pop_front();
    return msg;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Slice> queue_;
};

// Slice index position p sends during scatter-reduce step r.
std::size_t reduce_send_slice(std::size_t p, std::size_t r, std::size_t m) {
  return (p + 2 * m - r - 1) % m;
}

// Slice index position p sends during all-gather step r.
std::size_t gather_send_slice(std::size_t p, std::size_t r, std::size_t m) {
  return (p + m - r) % m;
}

Slice copy_slice(const ParamVector& buf, std::size_t L, std::size_t m,
                 std::size_t s) {
  const auto [lo, hi] = slice_bounds(L, m, s);
  return Slice(buf.data() + lo, buf.data() + hi);
}

void accumulate_slice(ParamVector& buf, const Slice& incoming, std::size_t L,
                      std::size_t m, std::size_t s) {
  const auto [lo, hi] = slice_bounds(L, m, s);
  for (std::size_t i = lo; i < hi; ++i) buf[i] = incoming[i - lo] + buf[i];
}

void store_slice(ParamVector& buf, const Slice& incoming, std::size_t L,
                 std::size_t m, std::size_t s) {
  const auto [lo, hi] = slice_bounds(L, m, s);
  std::copy(incoming.begin(), incoming.end(), buf.data() + lo);
}

void finalize_owned_slice(ParamVector& buf, std::size_t L, std::size_t m,
                          std::size_t s) {
  const auto [lo, hi] = slice_bounds(L, m, s);
  const double denom = static_cast<double>(m);
  for (std::size_t i = lo; i < hi; ++i) buf[i] /= denom;
}

void run_lockstep(std::vector<ParamVector>& bufs, std::size_t L) {
  const std::size_t m = bufs.size();
  std::vector<Slice> in_flight(m);
  for (std::size_t r = 0; r + 1 < m; ++r) {
    for (std::size_t p = 0; p < m; ++p) {
      in_flight[p] = copy_slice(bufs[p], L, m, reduce_send_slice(p, r, m));
    }
    for (std::size_t p = 0; p < m; ++p) {
      const std::size_t from = (p + m - 1) % m;
      accumulate_slice(bufs[p], in_flight[from], L, m,
                       reduce_send_slice(from, r, m));
    }
  }
  for (std::size_t p = 0; p < m; ++p) finalize_owned_slice(bufs[p], L, m, p);
  for (std::size_t r = 0; r + 1 < m; ++r) {
    for (std::size_t p = 0; p < m; ++p) {
      in_flight[p] = copy_slice(bufs[p], L, m, gather_send_slice(p, r, m));
    }
    for (std::size_t p = 0; p < m; ++p) {
      const std::size_t from = (p + m - 1) % m;
      store_slice(bufs[p], in_flight[from], L, m, gather_send_slice(from, r, m));
    }
  }
}

// Each member only ever waits on its predecessor's message for the current
// step, so the outcome does not depend on thread scheduling.
void run_threaded(std::vector<ParamVector>& bufs, std::size_t L) {
  const std::size_t m = bufs.size();
  std::vector<Channel> inbox(m);
  std::vector<std::exception_ptr> errors(m);

  auto member = [&](std::size_t p) {
    try {
      const std::size_t succ = (p + 1) % m;
      const std::size_t pred = (p + m - 1) % m;
      ParamVector& buf = bufs[p];
      for (std::size_t r = 0; r + 1 < m; ++r) {
        inbox[succ].send(copy_slice(buf, L, m, reduce_send_slice(p, r, m)));
        Slice got = inbox[p].receive();
        accumulate_slice(buf, got, L, m, reduce_send_slice(pred, r, m));
      }
      finalize_owned_slice(buf, L, m, p);
      for (std::size_t r = 0; r + 1 < m; ++r) {
        inbox[succ].send(copy_slice(buf, L, m, gather_send_slice(p, r, m)));
        Slice got = inbox[p].receive();
        store_slice(buf, got, L, m, gather_send_slice(pred, r, m));
      }
    } catch (...) {
      errors[p] = std::current_exception();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(m);
  for (std::size_t p = 0; p < m; ++p) threads.emplace_back(member, p);
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

AllReduceResult ring_allreduce_mean(const RingGroup& group,
                                    std::span<const ParamVector> inputs,
                                    ExecutionMode mode) {
  const std::size_t m = group.size();
  if (inputs.size() != m) {
    throw InvalidArgument("ring_allreduce_mean: " + std::to_string(inputs.size()) +
                          " inputs for a group of " + std::to_string(m));
  }
  const std::size_t L = inputs[0].size();
  for (const auto& in : inputs) {
    if (in.size() != L) {
      throw InvalidArgument("ring_allreduce_mean: input length mismatch");
    }
  }

  AllReduceResult result;
  result.outputs.assign(inputs.begin(), inputs.end());
  result.handshakes_per_member = 2 * (m - 1);
  if (m == 1) return result;

  if (mode == ExecutionMode::kThreaded) {
    run_threaded(result.outputs, L);
  } else {
    run_lockstep(result.outputs, L);
  }
  for (const auto& out : result.outputs) out.check_finite("ring_allreduce_mean");
  return result;
}

}  // namespace sesgd
