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

#include "sesgd/theory.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "json.hpp"

namespace sesgd {

namespace {

void require_k_below_n(uint32_t n, uint32_t k, const char* where) {
  if (k == 0 || k >= n) {
    throw InvalidArgument(std::string(where) + ": requires 1 <= k < n (got n=" +
                          std::to_string(n) + ", k=" + std::to_string(k) + ")");
  }
}

}  // namespace

void TheoryParams::validate() const {
  require_k_below_n(n, k, "theory");
  if (!(L > 0.0) || !(M > 0.0) || !(epsilon > 0.0)) {
    throw InvalidArgument("theory: L, M and epsilon must be > 0");
  }
  if (!(eta > 0.0)) throw InvalidArgument("theory: eta must be > 0");
}

std::array<double, 3> lemma_rhs_terms(const TheoryParams& p, uint64_t T, double f_x0) {
  p.validate();
  if (T < 1) throw InvalidArgument("lemma_rhs: T must be >= 1");
  const double n = p.n;
  const double k = p.k;
  const double ratio = (n * k - k) / (n - k);
  return {
      2.0 * (f_x0 - p.f_star) / (p.eta * static_cast<double>(T)),
      4.0 * p.eta * p.eta * p.L * p.L * p.M * p.M * ratio * ratio,
      p.eta * p.L * p.M * p.M,
  };
}

double lemma_rhs(const TheoryParams& p, uint64_t T, double f_x0) {
  const auto terms = lemma_rhs_terms(p, T, f_x0);
  return terms[0] + terms[1] + terms[2];
}

double theorem_eta(double epsilon, double L, double M, uint32_t n, uint32_t k) {
  require_k_below_n(n, k, "theorem_eta");
  if (!(epsilon > 0.0) || !(L > 0.0) || !(M > 0.0)) {
    throw InvalidArgument("theorem_eta: epsilon, L, M must be > 0");
  }
  const double nn = n;
  const double kk = k;
  const double first = epsilon / (4.0 * L * M * M);
  const double second = std::sqrt(epsilon) * (nn - kk) / (4.0 * (nn * kk - kk) * L * M);
  return std::min(first, second);
}

uint64_t theorem_min_iters(double epsilon, double eta, double f_x0, double f_star) {
  if (!(epsilon > 0.0) || !(eta > 0.0)) {
    throw InvalidArgument("theorem_min_iters: epsilon and eta must be > 0");
  }
  if (f_x0 < f_star) throw InvalidArgument("theorem_min_iters: f(x0) below f*");
  return static_cast<uint64_t>(std::ceil(4.0 * (f_x0 - f_star) / (eta * epsilon)));
}

double divergence_bound(double eta, uint32_t n, uint32_t k, double M) {
  require_k_below_n(n, k, "divergence_bound");
  const double nn = n;
  const double kk = k;
  return 2.0 * eta * (nn * kk - kk) * M / (nn - kk);
}

double lemma_lhs(const SimTrace& trace, const Task& task) {
  if (trace.records.empty()) throw InvalidArgument("lemma_lhs: empty trace");
  double sum = 0.0;
  for (const auto& rec : trace.records) {
    if (!rec.mean_before) {
      throw InvalidArgument("lemma_lhs: trace record " + std::to_string(rec.t) +
                            " has no parameter snapshot");
    }
    const ParamVector g = task.full_grad(*rec.mean_before);
    sum += vec_dot(g, g);
  }
  return sum / static_cast<double>(trace.records.size());
}

LemmaReport check_lemma(const SimTrace& trace, const Task& task,
                        const TheoryParams& params, double f_x0) {
  LemmaReport report;
  report.lhs = lemma_lhs(trace, task);
  report.rhs_terms = lemma_rhs_terms(params, trace.records.size(), f_x0);
  report.rhs = report.rhs_terms[0] + report.rhs_terms[1] + report.rhs_terms[2];
  report.holds = report.lhs <= report.rhs;
  report.needs_seed_averaging = !report.holds;
  return report;
}

double surrogate_f_star(const Task& task, uint64_t iterations, double eta) {
  ParamVector x = task.initial_params();
  double best = task.full_loss(x);
  for (uint64_t i = 0; i < iterations; ++i) {
    vec_axpy_inplace(-eta, task.full_grad(x), x);
    best = std::min(best, task.full_loss(x));
  }
  return best;
}

CampaignReport run_theory_campaign(const Task& task, uint32_t n, uint32_t k,
                                   const TimingModel& timing,
                                   const CampaignOptions& opts) {
  require_k_below_n(n, k, "theory campaign");
  if (opts.seeds < 1) throw InvalidArgument("theory campaign: seeds must be >= 1");

  CampaignReport rep;
  rep.n = n;
  rep.k = k;
  rep.seeds = opts.seeds;
  rep.epsilon = opts.epsilon;

  ProbeOptions probe;
  probe.radius = opts.probe_radius;
  const SmoothnessEstimate est =
      estimate_constants(task, opts.probes, opts.base_seed, probe);
  rep.L_hat = est.L_hat;
  rep.M_hat = est.M_hat;
  rep.f_x0 = task.full_loss(task.initial_params());
  // Long plain gradient descent at step 1 / L as the fallback optimum.
  rep.f_star = task.f_star().value_or(
      surrogate_f_star(task, 20000, 1.0 / std::max(est.L_hat, 1e-12)));
  rep.eta = theorem_eta(opts.epsilon, est.L_hat, est.M_hat, n, k);
  rep.T = theorem_min_iters(opts.epsilon, rep.eta, rep.f_x0, rep.f_star);
  if (opts.max_iterations > 0) rep.T = std::min(rep.T, opts.max_iterations);
  rep.T = std::max<uint64_t>(rep.T, 1);

  std::vector<double> lhs(opts.seeds, 0.0);
  std::vector<double> divergence(opts.seeds, 0.0);
  std::vector<double> grad_peak(opts.seeds, 0.0);
  std::vector<std::exception_ptr> errors(opts.seeds);

  auto run_seed = [&](uint32_t i) {
    try {
      TrainConfig cfg;
      cfg.n = n;
      cfg.k = k;
      cfg.b = opts.b;
      cfg.T = rep.T;
      cfg.eta = rep.eta;
      cfg.seed_sigma = opts.base_seed + i;
      RunOptions run_opts;
      run_opts.record_snapshots = true;
      const TrainingResult res =
          run_training(Algorithm::kSesgd, cfg, task, timing, run_opts);
      lhs[i] = lemma_lhs(res.trace, task);
      double div_sum = 0.0;
      for (const auto& r : res.trace.records) {
        div_sum += r.max_divergence;
        grad_peak[i] = std::max(grad_peak[i], r.max_grad_norm);
      }
      divergence[i] = div_sum / static_cast<double>(res.trace.records.size());
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  // Each seed writes only its own slots, so the result does not depend on
  // how seeds are spread over threads.
  const uint32_t workers = std::max<uint32_t>(1, std::min(opts.parallel, opts.seeds));
  std::vector<std::thread> pool;
  for (uint32_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (uint32_t i = w; i < opts.seeds; i += workers) run_seed(i);
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  rep.per_seed_lhs = lhs;
  for (uint32_t i = 0; i < opts.seeds; ++i) {
    rep.lhs += lhs[i];
    rep.mean_divergence += divergence[i];
    rep.M_used = std::max(rep.M_used, grad_peak[i]);
  }
  rep.lhs /= opts.seeds;
  rep.mean_divergence /= opts.seeds;
  rep.M_used = std::max(rep.M_used, rep.M_hat);

  TheoryParams params;
  params.L = est.L_hat;
  params.M = rep.M_used;
  params.epsilon = opts.epsilon;
  params.f_star = rep.f_star;
  params.n = n;
  params.k = k;
  params.eta = rep.eta;
  rep.rhs_terms = lemma_rhs_terms(params, rep.T, rep.f_x0);
  rep.rhs = rep.rhs_terms[0] + rep.rhs_terms[1] + rep.rhs_terms[2];
  rep.holds = rep.lhs <= rep.rhs;
  rep.below_epsilon = rep.lhs <= opts.epsilon;
  rep.divergence_bound = divergence_bound(rep.eta, n, k, rep.M_used);
  rep.divergence_holds = rep.mean_divergence <= rep.divergence_bound;
  return rep;
}

std::string theory_report_json(const CampaignReport& r) {
  nlohmann::ordered_json doc;
  doc["lhs"] = r.lhs;
  doc["rhs_terms"] = {r.rhs_terms[0], r.rhs_terms[1], r.rhs_terms[2]};
  doc["rhs"] = r.rhs;
  doc["eta"] = r.eta;
  doc["T"] = r.T;
  doc["holds"] = r.holds;
  doc["seeds"] = r.seeds;
  doc["epsilon"] = r.epsilon;
  doc["below_epsilon"] = r.below_epsilon;
  doc["n"] = r.n;
  doc["k"] = r.k;
  doc["L_hat"] = r.L_hat;
  doc["M_hat"] = r.M_hat;
  doc["M_used"] = r.M_used;
  doc["f_x0"] = r.f_x0;
  doc["f_star"] = r.f_star;
  doc["mean_divergence"] = r.mean_divergence;
  doc["divergence_bound"] = r.divergence_bound;
  doc["divergence_holds"] = r.divergence_holds;
  doc["per_seed_lhs"] = r.per_seed_lhs;
  return doc.dump(2) + "\n";
}

}  // namespace sesgd
