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

#ifndef SESGD_THEORY_H_
#define SESGD_THEORY_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sesgd/algorithms.h"
#include "sesgd/models.h"

namespace sesgd {

// Constants of the non-convex convergence analysis. Requires k < n.
struct TheoryParams {
  double L = 1.0;        // smoothness
  double M = 1.0;        // gradient bound
  double epsilon = 0.05;
  double f_star = 0.0;
  uint32_t n = 2;
  uint32_t k = 1;
  double eta = 0.01;

  void validate() const;
};

// The three terms of the averaged squared-gradient bound:
//   2(f(x0) - f*) / (eta T),
//   4 eta^2 L^2 M^2 (nk - k)^2 / (n - k)^2,
//   eta L M^2.
std::array<double, 3> lemma_rhs_terms(const TheoryParams& p, uint64_t T, double f_x0);
double lemma_rhs(const TheoryParams& p, uint64_t T, double f_x0);

// min{ eps / (4 L M^2), sqrt(eps)(n - k) / (4 (nk - k) L M) }
double theorem_eta(double epsilon, double L, double M, uint32_t n, uint32_t k);

// ceil(4 (f_x0 - f_star) / (eta eps)); throws if f_x0 < f_star.
uint64_t theorem_min_iters(double epsilon, double eta, double f_x0, double f_star);

// 2 eta (nk - k) M / (n - k)
double divergence_bound(double eta, uint32_t n, uint32_t k, double M);

// Mean over the trace of ||grad f(mean_before_t)||^2 using full-dataset
// gradients. Throws if any record lacks a snapshot.
double lemma_lhs(const SimTrace& trace, const Task& task);

struct LemmaReport {
  double lhs = 0.0;
  double rhs = 0.0;
  std::array<double, 3> rhs_terms{};
  bool holds = false;
  // The bound is on an expectation; a single-run violation only means more
  // seeds should be averaged.
  bool needs_seed_averaging = false;
};

LemmaReport check_lemma(const SimTrace& trace, const Task& task,
                        const TheoryParams& params, double f_x0);

// Best full-batch loss reached by plain gradient descent from the task's
// initial point; a stand-in for f* when no closed form exists.
double surrogate_f_star(const Task& task, uint64_t iterations, double eta);

struct CampaignOptions {
  double epsilon = 0.05;
  uint32_t seeds = 20;
  uint64_t base_seed = 1;
  std::size_t probes = 32;
  double probe_radius = 1.0;
  uint32_t b = 1;
  // Cap on the prescribed iteration count, 0 for none.
  uint64_t max_iterations = 0;
  uint32_t parallel = 1;
};

// End-to-end check on one task: estimate (L, M), pick eta and T from the
// theorem, run SESGD over several seeds, and compare the seed-averaged
// quantities with their bounds.
struct CampaignReport {
  double L_hat = 0.0;
  double M_hat = 0.0;     // from probing
  double M_used = 0.0;    // max of M_hat and the largest observed gradient
  double f_x0 = 0.0;
  double f_star = 0.0;
  double eta = 0.0;
  uint64_t T = 0;
  uint32_t n = 0;
  uint32_t k = 0;
  uint32_t seeds = 0;
  double epsilon = 0.0;
  double lhs = 0.0;       // seed-averaged
  std::array<double, 3> rhs_terms{};
  double rhs = 0.0;
  bool holds = false;     // lhs <= rhs
  bool below_epsilon = false;  // lhs <= epsilon
  double mean_divergence = 0.0;
  double divergence_bound = 0.0;
  bool divergence_holds = false;
  std::vector<double> per_seed_lhs;
};

CampaignReport run_theory_campaign(const Task& task, uint32_t n, uint32_t k,
                                   const TimingModel& timing,
                                   const CampaignOptions& opts);

// {lhs, rhs_terms: [a, b1, b2], eta, T, holds, seeds, ...}
std::string theory_report_json(const CampaignReport& report);

}  // namespace sesgd

#endif  // SESGD_THEORY_H_
