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

#include "sesgd/costmodel.h"

#include <cmath>

namespace sesgd {

double ring_time(double G, double nu, double tau, uint32_t m) {
  if (m == 0) throw InvalidArgument("ring_time: group size must be >= 1");
  if (m == 1) return 0.0;
  return 2.0 * (m - 1) * (G / (m * nu) + tau);
}

double sesgd_time(double G, double nu, double tau, uint32_t n, uint32_t k) {
  if (k == 0 || k > n || n % k != 0) {
    throw InvalidArgument("sesgd_time: groups must divide workers");
  }
  return ring_time(G, nu, tau, n / k);
}

double ring_time_approx(double G, double nu, double tau, uint32_t m) {
  return 2.0 * G / nu + 2.0 * m * tau;
}

double sesgd_time_sqrt_approx(double G, double nu, double tau, uint32_t n) {
  return 2.0 * G / nu + 2.0 * std::sqrt(static_cast<double>(n)) * tau;
}

void CostInputs::validate() const {
  if (!(G >= 0.0) || !(nu > 0.0) || !(tau >= 0.0)) {
    throw InvalidArgument("cost inputs: need G >= 0, nu > 0, tau >= 0");
  }
  if (n < 1 || k < 1 || k > n || n % k != 0) {
    throw InvalidArgument("cost inputs: groups must divide workers");
  }
  if (tensors < 1) throw InvalidArgument("cost inputs: tensors must be >= 1");
}

double predicted_speedup(const CostInputs& in, double compute_s_per_iter) {
  in.validate();
  const double ring = compute_s_per_iter + in.tensors * ring_time(in.G, in.nu, in.tau, in.n);
  const double sesgd =
      compute_s_per_iter + in.tensors * sesgd_time(in.G, in.nu, in.tau, in.n, in.k);
  if (sesgd == 0.0) return 1.0;  // both sides zero
  return ring / sesgd;
}

double non_overlapped_iteration_time(const LayerProfile& profile, uint32_t m,
                                     const NetworkConfig& net) {
  double total = profile.total_compute();
  for (const auto& layer : profile.layers) {
    total += ring_time(static_cast<double>(layer.param_bytes), net.bandwidth_nu,
                       net.latency_tau, m);
  }
  return total;
}

std::vector<IdleRow> idle_table(const std::vector<LayerProfile>& profiles,
                                const std::vector<uint32_t>& n_list,
                                const LinkModel& link) {
  std::vector<IdleRow> rows;
  for (const auto& profile : profiles) {
    for (uint32_t n : n_list) {
      const SimResult sim = simulate_overlapped_iteration(profile, n, link);
      IdleRow row{profile.name, n, sim.stats.idle_time, 0.0};
      if (sim.stats.total_time > 0.0) row.proportion = idle_proportion(sim.stats);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace sesgd
