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

#ifndef SESGD_NETSIM_H_
#define SESGD_NETSIM_H_

#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <vector>

#include "sesgd/core.h"

namespace sesgd {

// Full-duplex point-to-point link: sending and receiving never contend.
struct LinkModel {
  NetworkConfig config;

  explicit LinkModel(NetworkConfig cfg);

  // latency_tau + bytes / bandwidth_nu
  double transfer_time(double bytes) const;
};

// Monotone simulated clock.
class SimClock {
 public:
  double now() const { return now_; }
  // Throws if t is earlier than now().
  void advance_to(double t);

 private:
  double now_ = 0.0;
};

// Time-ordered event queue; ties fire in scheduling order.
class EventQueue {
 public:
  using Action = std::function<void()>;

  void schedule(double at, Action action);
  // Pops and runs events until empty. Returns the time of the last event.
  double run();
  const SimClock& clock() const { return clock_; }

 private:
  struct Event {
    double at;
    uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  SimClock clock_;
  uint64_t next_seq_ = 0;
};

// Communication accounting for one worker. In the bulk-synchronous ring model
// every worker performs the same number of handshakes and sees the same
// timeline, so handshakes and the time fields are per worker;
// bytes_sent is kept per ring position because non-divisible slicing makes it
// uneven.
struct CommStats {
  uint64_t handshakes = 0;
  std::vector<uint64_t> bytes_sent;
  double busy_time = 0.0;   // sum of payload (bytes / nu) terms
  double idle_time = 0.0;   // handshakes * latency_tau
  double total_time = 0.0;  // communication time only

  void accumulate(const CommStats& other);
};

struct LayerSpec {
  uint32_t layer_index = 0;
  uint64_t param_bytes = 0;
  double backward_compute_s = 0.0;
};

// Layers in gradient availability order (output layer first).
struct LayerProfile {
  std::string name;
  std::vector<LayerSpec> layers;

  uint64_t total_bytes() const;
  double total_compute() const;
  void validate() const;
};

struct SimResult {
  double elapsed = 0.0;
  CommStats stats;
};

// 2(m - 1) bulk-synchronous rounds (scatter-reduce then all-gather). Each
// round ends when the last slice of that round has arrived.
SimResult simulate_ring_allreduce(uint32_t m, uint64_t message_bytes,
                                  const LinkModel& link);

// Backward pass produces layer gradients in profile order; each layer's
// allreduce starts once its gradient exists and the link is free. Allreduces
// never interleave on the link. elapsed covers compute and communication;
// stats.total_time covers communication only.
SimResult simulate_overlapped_iteration(const LayerProfile& profile,
                                        uint32_t group_size,
                                        const LinkModel& link);

// idle_time / total_time. Throws if total_time is zero.
double idle_proportion(const CommStats& stats);

// JSON array of {"bytes": int, "compute_s": float}.
LayerProfile parse_layer_profile(const std::string& json_text,
                                 const std::string& name);
LayerProfile load_layer_profile(const std::string& path);

// "resnet18-like", "densenet121-like", "vgg16-like". Synthetic shapes loosely
// following the public architectures; compute times are made up.
LayerProfile builtin_profile(const std::string& name);
std::vector<std::string> builtin_profile_names();

// A bundled name, or otherwise a path to a JSON file.
LayerProfile resolve_layer_profile(const std::string& name_or_path);

// One tensor of `bytes` with the given backward compute time.
LayerProfile single_tensor_profile(uint64_t bytes, double compute_s = 0.0);

// `count` identical tensors.
LayerProfile uniform_profile(uint32_t count, uint64_t bytes_per_layer,
                             double compute_per_layer_s);

}  // namespace sesgd

#endif  // SESGD_NETSIM_H_
