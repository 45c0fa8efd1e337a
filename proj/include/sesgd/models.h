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

#ifndef SESGD_MODELS_H_
#define SESGD_MODELS_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sesgd/core.h"

namespace sesgd {

// Labelled feature rows.
struct Dataset {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;

  std::size_t size() const { return features.size(); }
  std::size_t feature_dim() const {
    return features.empty() ? 0 : features.front().size();
  }
  int num_classes() const;
};

// Rows of numbers with the label in the last column. A first row that does
// not parse as numbers is treated as a header. Ragged rows are an error.
Dataset load_csv_dataset(const std::string& path);
Dataset parse_csv_dataset(const std::string& text, const std::string& source);

// Finite-sum objective f(x) = (1/N) sum_j f(x; j) + r(x). Immutable once
// built, so concurrent evaluation is safe.
class Task {
 public:
  virtual ~Task() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t num_samples() const = 0;

  // Mean over `samples` (indices may repeat) plus the regularizer.
  double loss(const ParamVector& x, std::span<const std::size_t> samples) const;
  ParamVector grad(const ParamVector& x,
                   std::span<const std::size_t> samples) const;

  double full_loss(const ParamVector& x) const;
  ParamVector full_grad(const ParamVector& x) const;

  // Loss and gradient of a single sample, regularizer included.
  double sample_loss_with_reg(const ParamVector& x, std::size_t j) const;
  ParamVector sample_grad_with_reg(const ParamVector& x, std::size_t j) const;

  // Starting point shared by every worker.
  virtual ParamVector initial_params() const = 0;
  virtual std::optional<double> f_star() const { return std::nullopt; }
  virtual std::optional<ParamVector> minimizer() const { return std::nullopt; }

 protected:
  virtual double sample_loss(const ParamVector& x, std::size_t j) const = 0;
  // grad_out += gradient of sample j.
  virtual void add_sample_grad(const ParamVector& x, std::size_t j,
                               ParamVector& grad_out) const = 0;
  virtual double regularizer(const ParamVector&) const { return 0.0; }
  virtual void add_regularizer_grad(const ParamVector&, ParamVector&) const {}
};

// Per-sample loss 0.5 * ||x - c_j||^2. Minimizer is the centroid, L = 1.
class QuadraticTask : public Task {
 public:
  explicit QuadraticTask(std::vector<ParamVector> centers,
                         ParamVector initial = {});

  std::string name() const override { return "quadratic"; }
  std::size_t dim() const override { return dim_; }
  std::size_t num_samples() const override { return centers_.size(); }
  ParamVector initial_params() const override { return initial_; }
  std::optional<double> f_star() const override { return f_star_; }
  std::optional<ParamVector> minimizer() const override { return centroid_; }

  const std::vector<ParamVector>& centers() const { return centers_; }

 protected:
  double sample_loss(const ParamVector& x, std::size_t j) const override;
  void add_sample_grad(const ParamVector& x, std::size_t j,
                       ParamVector& grad_out) const override;

 private:
  std::size_t dim_;
  std::vector<ParamVector> centers_;
  ParamVector initial_;
  ParamVector centroid_;
  double f_star_ = 0.0;
};

// Binary cross-entropy on sigmoid(w . a + bias) with an L2 penalty
// (weight_decay / 2) * ||theta||^2 on all parameters. Parameter layout is the
// feature weights followed by the bias.
class LogisticTask : public Task {
 public:
  static constexpr double kWeightDecay = 5e-4;

  explicit LogisticTask(Dataset data, double weight_decay = kWeightDecay);

  std::string name() const override { return "logistic"; }
  std::size_t dim() const override { return features_ + 1; }
  std::size_t num_samples() const override { return data_.size(); }
  ParamVector initial_params() const override { return ParamVector(dim()); }

  // Fraction of samples whose thresholded prediction matches the label.
  double accuracy(const ParamVector& x) const;
  const Dataset& data() const { return data_; }

 protected:
  double sample_loss(const ParamVector& x, std::size_t j) const override;
  void add_sample_grad(const ParamVector& x, std::size_t j,
                       ParamVector& grad_out) const override;
  double regularizer(const ParamVector& x) const override;
  void add_regularizer_grad(const ParamVector& x,
                            ParamVector& grad_out) const override;

 private:
  double logit(const ParamVector& x, std::size_t j) const;

  Dataset data_;
  std::size_t features_;
  double weight_decay_;
};

// One hidden tanh layer, softmax cross-entropy.
//
// Parameter layout: W1 (hidden x in, row-major), b1 (hidden),
// W2 (classes x hidden, row-major), b2 (classes).
class MlpTask : public Task {
 public:
  MlpTask(Dataset data, std::size_t hidden, std::size_t classes,
          uint64_t init_seed);

  std::string name() const override { return "mlp"; }
  std::size_t dim() const override;
  std::size_t num_samples() const override { return data_.size(); }
  ParamVector initial_params() const override { return initial_; }

  std::size_t in_dim() const { return in_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t classes() const { return classes_; }

  // Class probabilities for one input row.
  std::vector<double> forward(const ParamVector& x,
                              std::span<const double> input) const;
  double accuracy(const ParamVector& x) const;

 protected:
  double sample_loss(const ParamVector& x, std::size_t j) const override;
  void add_sample_grad(const ParamVector& x, std::size_t j,
                       ParamVector& grad_out) const override;

 private:
  struct Activations {
    std::vector<double> hidden;  // tanh outputs
    std::vector<double> probs;   // softmax outputs
  };
  Activations run(const ParamVector& x, std::span<const double> input) const;

  Dataset data_;
  std::size_t in_;
  std::size_t hidden_;
  std::size_t classes_;
  ParamVector initial_;
};

// Centers drawn from N(1, I); workers start at the origin.
std::unique_ptr<QuadraticTask> make_quadratic(std::size_t dim,
                                              std::size_t n_samples,
                                              uint64_t seed);

// Two Gaussian blobs at +/- `separation` / 2 along a random unit direction,
// unit noise. dim is the feature count (>= 2); the task adds a bias.
std::unique_ptr<LogisticTask> make_logistic(std::size_t dim,
                                            std::size_t n_samples,
                                            uint64_t seed,
                                            double separation = 6.0);

// `classes` Gaussian blobs with centres drawn from N(0, 2^2 I).
std::unique_ptr<MlpTask> make_mlp(std::size_t in_dim, std::size_t hidden,
                                  std::size_t classes, std::size_t n_samples,
                                  uint64_t seed);

struct SmoothnessEstimate {
  double L_hat = 0.0;
  double M_hat = 0.0;
};

struct ProbeOptions {
  std::optional<ParamVector> center;  // defaults to task.initial_params()
  double radius = 1.0;
};

// Probes `probe_count` points uniformly in a ball around the centre.
// L_hat is the largest gradient difference ratio over all probe pairs
// (coincident pairs are skipped) and M_hat the largest full-gradient norm.
SmoothnessEstimate estimate_constants(const Task& task, std::size_t probe_count,
                                      uint64_t seed, const ProbeOptions& opts = {});

}  // namespace sesgd

#endif  // SESGD_MODELS_H_
