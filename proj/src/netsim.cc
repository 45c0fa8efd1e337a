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

#include "sesgd/netsim.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "sesgd/collectives.h"

namespace sesgd {

LinkModel::LinkModel(NetworkConfig cfg) : config(cfg) { config.validate(); }

double LinkModel::transfer_time(double bytes) const {
  return config.latency_tau + bytes / config.bandwidth_nu;
}

void SimClock::advance_to(double t) {
  if (t < now_) throw InvalidArgument("SimClock: time moved backwards");
  now_ = t;
}

void EventQueue::schedule(double at, Action action) {
  if (at < clock_.now()) throw InvalidArgument("event scheduled in the past");
  queue_.push(Event{at, next_seq_++, std::move(action)});
}

double EventQueue::run() {
  while (!queue_.empty()) {
    Event ev = queue_.top();
    queue_.pop();
    clock_.advance_to(ev.at);
    ev.action();
  }
  return clock_.now();
}

void CommStats::accumulate(const CommStats& other) {
  handshakes += other.handshakes;
  if (bytes_sent.size() < other.bytes_sent.size()) {
    bytes_sent.resize(other.bytes_sent.size(), 0);
  }
  for (std::size_t i = 0; i < other.bytes_sent.size(); ++i) {
    bytes_sent[i] += other.bytes_sent[i];
  }
  busy_time += other.busy_time;
  idle_time += other.idle_time;
  total_time += other.total_time;
}

uint64_t LayerProfile::total_bytes() const {
  uint64_t sum = 0;
  for (const auto& l : layers) sum += l.param_bytes;
  return sum;
}

double LayerProfile::total_compute() const {
  double sum = 0.0;
  for (const auto& l : layers) sum += l.backward_compute_s;
  return sum;
}

void LayerProfile::validate() const {
  if (layers.empty()) throw InvalidArgument("layer profile '" + name + "' is empty");
  for (const auto& l : layers) {
    if (!(l.backward_compute_s >= 0.0) || !std::isfinite(l.backward_compute_s)) {
      throw InvalidArgument("layer profile '" + name +
                            "': compute time must be finite and >= 0");
    }
  }
}

SimResult simulate_ring_allreduce(uint32_t m, uint64_t message_bytes,
                                  const LinkModel& link) {
  if (m == 0) throw InvalidArgument("simulate_ring_allreduce: group size must be >= 1");
  SimResult result;
  result.stats.bytes_sent.assign(m, 0);
  if (m == 1) return result;

  const uint32_t rounds = 2 * (m - 1);
  const double nu = link.config.bandwidth_nu;
  const double tau = link.config.latency_tau;

  EventQueue events;
  uint32_t round = 0;
  uint32_t pending = 0;
  double round_payload = 0.0;

  // Worker p sends slice (p - r - 1) mod m while reducing and (p - r') mod m
  // while gathering, matching the value-level collective.
  auto slice_sent = [m](uint32_t p, uint32_t r) -> uint32_t {
    if (r < m - 1) return (p + 2 * m - r - 1) % m;
    const uint32_t rg = r - (m - 1);
    return (p + m - rg) % m;
  };

  std::function<void(double)> start_round = [&](double now) {
    pending = m;
    round_payload = 0.0;
    for (uint32_t p = 0; p < m; ++p) {
      const auto [lo, hi] = slice_bounds(message_bytes, m, slice_sent(p, round));
      const uint64_t bytes = hi - lo;
      result.stats.bytes_sent[p] += bytes;
      const double payload = static_cast<double>(bytes) / nu;
      round_payload = std::max(round_payload, payload);
      events.schedule(now + tau + payload, [&] {
        if (--pending > 0) return;
        // Last arrival of the round: every worker has its slice.
        result.stats.busy_time += round_payload;
        result.stats.handshakes += 1;
        if (++round < rounds) start_round(events.clock().now());
      });
    }
  };

  start_round(0.0);
  result.elapsed = events.run();
  result.stats.idle_time = static_cast<double>(result.stats.handshakes) * tau;
  result.stats.total_time = result.elapsed;
  return result;
}

SimResult simulate_overlapped_iteration(const LayerProfile& profile,
                                        uint32_t group_size,
                                        const LinkModel& link) {
  profile.validate();
  if (group_size == 0) {
    throw InvalidArgument("simulate_overlapped_iteration: group size must be >= 1");
  }

  SimResult result;
  result.stats.bytes_sent.assign(group_size, 0);
  EventQueue events;
  std::deque<std::size_t> ready;
  bool link_busy = false;
  double last_finish = 0.0;

  std::function<void()> try_start = [&] {
    if (link_busy || ready.empty()) return;
    const std::size_t layer = ready.front();
    ready.pop_front();
    const SimResult comm = simulate_ring_allreduce(
        group_size, profile.layers[layer].param_bytes, link);
    result.stats.accumulate(comm.stats);
    link_busy = true;
    events.schedule(events.clock().now() + comm.elapsed, [&] {
      link_busy = false;
      last_finish = events.clock().now();
      try_start();
    });
  };

  double grad_ready = 0.0;
  for (std::size_t i = 0; i < profile.layers.size(); ++i) {
    grad_ready += profile.layers[i].backward_compute_s;
    events.schedule(grad_ready, [&, i] {
      ready.push_back(i);
      try_start();
    });
  }
  const double end = events.run();
  result.elapsed = std::max(end, last_finish);
  return result;
}

double idle_proportion(const CommStats& stats) {
  if (!(stats.total_time > 0.0)) {
    throw InvalidArgument("idle_proportion: total communication time is zero");
  }
  return stats.idle_time / stats.total_time;
}

LayerProfile parse_layer_profile(const std::string& json_text,
                                 const std::string& name) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("layer profile '" + name + "': " + e.what());
  }
  if (!doc.is_array()) {
    throw InvalidArgument("layer profile '" + name + "': expected a JSON array");
  }
  LayerProfile profile;
  profile.name = name;
  uint32_t index = 0;
  for (const auto& entry : doc) {
    if (!entry.is_object() || !entry.contains("bytes") ||
        !entry.contains("compute_s")) {
      throw InvalidArgument("layer profile '" + name +
                            "': entries need \"bytes\" and \"compute_s\"");
    }
    for (const auto& [key, _] : entry.items()) {
      if (key != "bytes" && key != "compute_s") {
        throw InvalidArgument("layer profile '" + name + "': unknown key '" +
                              key + "'");
      }
    }
    const auto& bytes = entry["bytes"];
    if (!bytes.is_number_integer() || bytes.get<int64_t>() < 0) {
      throw InvalidArgument("layer profile '" + name +
                            "': bytes must be a non-negative integer");
    }
    if (!entry["compute_s"].is_number()) {
      throw InvalidArgument("layer profile '" + name + "': compute_s must be a number");
    }
    profile.layers.push_back(LayerSpec{index++, bytes.get<uint64_t>(),
                                       entry["compute_s"].get<double>()});
  }
  profile.validate();
  return profile;
}

LayerProfile load_layer_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open layer profile '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_layer_profile(buf.str(), path);
}

namespace {

constexpr uint64_t kFloatBytes = 4;

// Builds layers input-first, then reverses into gradient availability order.
class ProfileBuilder {
 public:
  explicit ProfileBuilder(std::string name) { profile_.name = std::move(name); }

  void add(uint64_t params, double compute_s) {
    profile_.layers.push_back(LayerSpec{0, params * kFloatBytes, compute_s});
  }
  void conv(uint64_t in_ch, uint64_t out_ch, uint64_t kernel, double compute_s) {
    add(in_ch * out_ch * kernel * kernel, compute_s);
  }
  // Batch-norm scale and shift packed into one tensor.
  void norm(uint64_t channels) { add(2 * channels, 2e-5); }

  LayerProfile finish() {
    std::reverse(profile_.layers.begin(), profile_.layers.end());
    for (uint32_t i = 0; i < profile_.layers.size(); ++i) {
      profile_.layers[i].layer_index = i;
    }
    return std::move(profile_);
  }

 private:
  LayerProfile profile_;
};

LayerProfile resnet18_like() {
  ProfileBuilder p("resnet18-like");
  p.conv(3, 64, 7, 6e-4);
  p.norm(64);
  uint64_t in = 64;
  for (uint64_t width : {64, 128, 256, 512}) {
    for (int block = 0; block < 2; ++block) {
      const bool down = block == 0 && width != 64;
      p.conv(in, width, 3, 5e-4);
      p.norm(width);
      p.conv(width, width, 3, 5e-4);
      p.norm(width);
      if (down) {
        p.conv(in, width, 1, 6e-5);
        p.norm(width);
      }
      in = width;
    }
  }
  p.add(512 * 1000 + 1000, 1e-4);
  return p.finish();
}

LayerProfile densenet121_like() {
  ProfileBuilder p("densenet121-like");
  constexpr uint64_t kGrowth = 32;
  constexpr uint64_t kBottleneck = 4 * kGrowth;
  p.conv(3, 64, 7, 4e-4);
  p.norm(64);
  uint64_t channels = 64;
  const uint64_t block_sizes[] = {6, 12, 24, 16};
  for (std::size_t b = 0; b < 4; ++b) {
    for (uint64_t l = 0; l < block_sizes[b]; ++l) {
      p.norm(channels);
      p.conv(channels, kBottleneck, 1, 8e-5);
      p.norm(kBottleneck);
      p.conv(kBottleneck, kGrowth, 3, 1.2e-4);
      channels += kGrowth;
    }
    if (b < 3) {
      p.norm(channels);
      p.conv(channels, channels / 2, 1, 1e-4);
      channels /= 2;
    }
  }
  p.norm(channels);
  p.add(channels * 1000 + 1000, 1e-4);
  return p.finish();
}

LayerProfile vgg16_like() {
  ProfileBuilder p("vgg16-like");
  uint64_t in = 3;
  for (uint64_t width : {64, 64, 128, 128, 256, 256, 256, 512, 512, 512, 512,
                         512, 512}) {
    p.conv(in, width, 3, 1.5e-3);
    p.add(width, 1e-5);  // bias
    in = width;
  }
  p.add(512 * 7 * 7 * 4096, 2e-3);
  p.add(4096, 1e-5);
  p.add(4096 * 4096, 5e-4);
  p.add(4096, 1e-5);
  p.add(4096 * 1000, 1.5e-4);
  p.add(1000, 1e-5);
  return p.finish();
}

}  // namespace

LayerProfile builtin_profile(const std::string& name) {
  if (name == "resnet18-like") return resnet18_like();
  if (name == "densenet121-like") return densenet121_like();
  if (name == "vgg16-like") return vgg16_like();
  throw InvalidArgument("unknown layer profile '" + name + "'");
}

std::vector<std::string> builtin_profile_names() {
  return {"resnet18-like", "densenet121-like", "vgg16-like"};
}

LayerProfile resolve_layer_profile(const std::string& name_or_path) {
  const auto names = builtin_profile_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return builtin_profile(name_or_path);
  }
  return load_layer_profile(name_or_path);
}

LayerProfile single_tensor_profile(uint64_t bytes, double compute_s) {
  return LayerProfile{"single-tensor", {LayerSpec{0, bytes, compute_s}}};
}

LayerProfile uniform_profile(uint32_t count, uint64_t bytes_per_layer,
                             double compute_per_layer_s) {
  LayerProfile profile;
  profile.name = "uniform";
  for (uint32_t i = 0; i < count; ++i) {
    profile.layers.push_back(LayerSpec{i, bytes_per_layer, compute_per_layer_s});
  }
  return profile;
}

}  // namespace sesgd
