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

#ifndef SESGD_COSTMODEL_H_
#define SESGD_COSTMODEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sesgd/netsim.h"

namespace sesgd {

// Closed-form communication costs. These never call the simulator, so the two
// can be checked against each other.

// 2(m - 1)(G / (m nu) + tau); zero for m == 1. Throws on m == 0.
double ring_time(double G, double nu, double tau, uint32_t m);

// Ring allreduce inside one of k equal groups: ring_time(G, nu, tau, n / k).
double sesgd_time(double G, double nu, double tau, uint32_t n, uint32_t k);

// Large-m approximation 2G/nu + 2 m tau of ring_time.
double ring_time_approx(double G, double nu, double tau, uint32_t m);
// 2G/nu + 2 sqrt(n) tau, the group-of-sqrt(n) approximation of sesgd_time.
double sesgd_time_sqrt_approx(double G, double nu, double tau, uint32_t n);

struct CostInputs {
  double G = 0.0;  // bytes per tensor
  double nu = 0.0;
  double tau = 0.0;
  uint32_t n = 1;
  uint32_t k = 1;
  uint32_t tensors = 1;

  void validate() const;
};

// Non-overlapped per-iteration time ratio Ring-SGD / SESGD:
// (compute + tensors * ring_time) / (compute + tensors * sesgd_time).
double predicted_speedup(const CostInputs& in, double compute_s_per_iter);

// Backward compute followed by every layer's ring allreduce back to back, no
// overlap: compute + sum over layers of ring_time(bytes, nu, tau, m).
double non_overlapped_iteration_time(const LayerProfile& profile, uint32_t m,
                                     const NetworkConfig& net);

struct IdleRow {
  std::string model;
  uint32_t workers = 0;
  double idle_s = 0.0;
  double proportion = 0.0;  // 0 when there is no communication
};

// One overlapped iteration of a full-world ring per (profile, n).
std::vector<IdleRow> idle_table(const std::vector<LayerProfile>& profiles,
                                const std::vector<uint32_t>& n_list,
                                const LinkModel& link);

}  // namespace sesgd

#endif  // SESGD_COSTMODEL_H_
