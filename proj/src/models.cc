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

#include "sesgd/models.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sesgd {

int Dataset::num_classes() const {
  int top = -1;
  for (int y : labels) top = std::max(top, y);
  return top + 1;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_number(const std::string& field, double& value) {
  const auto begin = field.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return false;
  const auto end = field.find_last_not_of(" \t\r");
  const std::string trimmed = field.substr(begin, end - begin + 1);
  std::size_t used = 0;
  try {
    value = std::stod(trimmed, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == trimmed.size() && std::isfinite(value);
}

}  // namespace

Dataset parse_csv_dataset(const std::string& text, const std::string& source) {
  Dataset data;
  std::stringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size() && numeric; ++i) {
      numeric = parse_number(fields[i], row[i]);
    }
    if (!numeric) {
      if (width == 0 && data.size() == 0) {
        width = fields.size();  // header
        continue;
      }
      throw InvalidArgument(source + ":" + std::to_string(line_no) +
                            ": non-numeric field");
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw InvalidArgument(source + ":" + std::to_string(line_no) +
                            ": ragged row (" + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(width) + ")");
    }
    if (width < 2) {
      throw InvalidArgument(source + ": rows need at least one feature and a label");
    }
    const double label = row.back();
    if (label < 0 || label != std::floor(label)) {
      throw InvalidArgument(source + ":" + std::to_string(line_no) +
                            ": label must be a non-negative integer");
    }
    row.pop_back();
    data.features.push_back(std::move(row));
    data.labels.push_back(static_cast<int>(label));
  }
  if (data.size() == 0) throw InvalidArgument(source + ": no data rows");
  return data;
}

Dataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open dataset '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv_dataset(buf.str(), path);
}

// ---------------------------------------------------------------------------
// Task

double Task::loss(const ParamVector& x, std::span<const std::size_t> samples) const {
  if (x.size() != dim()) throw InvalidArgument("loss: parameter length mismatch");
  if (samples.empty()) throw InvalidArgument("loss: empty sample set");
  double acc = 0.0;
  for (std::size_t j : samples) acc += sample_loss(x, j);
  const double value = acc / static_cast<double>(samples.size()) + regularizer(x);
  if (!std::isfinite(value)) throw NumericError(name() + ": non-finite loss");
  return value;
}

ParamVector Task::grad(const ParamVector& x,
                       std::span<const std::size_t> samples) const {
  if (x.size() != dim()) throw InvalidArgument("grad: parameter length mismatch");
  if (samples.empty()) throw InvalidArgument("grad: empty sample set");
  ParamVector g(dim());
  for (std::size_t j : samples) add_sample_grad(x, j, g);
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= inv;
  add_regularizer_grad(x, g);
  g.check_finite("grad");
  return g;
}

namespace {

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace

double Task::full_loss(const ParamVector& x) const {
  return loss(x, all_indices(num_samples()));
}

ParamVector Task::full_grad(const ParamVector& x) const {
  return grad(x, all_indices(num_samples()));
}

double Task::sample_loss_with_reg(const ParamVector& x, std::size_t j) const {
  const std::size_t one[] = {j};
  return loss(x, one);
}

ParamVector Task::sample_grad_with_reg(const ParamVector& x, std::size_t j) const {
  const std::size_t one[] = {j};
  return grad(x, one);
}

// ---------------------------------------------------------------------------
// Quadratic

QuadraticTask::QuadraticTask(std::vector<ParamVector> centers, ParamVector initial)
    : centers_(std::move(centers)), initial_(std::move(initial)) {
  if (centers_.empty()) throw InvalidArgument("quadratic: no samples");
  dim_ = centers_.front().size();
  if (dim_ == 0) throw InvalidArgument("quadratic: dim must be >= 1");
  for (const auto& c : centers_) {
    if (c.size() != dim_) throw InvalidArgument("quadratic: ragged centers");
  }
  if (initial_.empty()) initial_ = ParamVector(dim_);
  if (initial_.size() != dim_) {
    throw InvalidArgument("quadratic: initial point has wrong length");
  }
  centroid_ = vec_mean(centers_);
  f_star_ = full_loss(centroid_);
}

double QuadraticTask::sample_loss(const ParamVector& x, std::size_t j) const {
  const double d = vec_distance(x, centers_[j]);
  return 0.5 * d * d;
}

void QuadraticTask::add_sample_grad(const ParamVector& x, std::size_t j,
                                    ParamVector& grad_out) const {
  const ParamVector& c = centers_[j];
  for (std::size_t i = 0; i < dim_; ++i) grad_out[i] += x[i] - c[i];
}

std::unique_ptr<QuadraticTask> make_quadratic(std::size_t dim,
                                              std::size_t n_samples,
                                              uint64_t seed) {
  if (dim < 1) throw InvalidArgument("quadratic: dim must be >= 1");
  if (n_samples < 1) throw InvalidArgument("quadratic: samples must be >= 1");
  Rng64 rng(splitmix64_mix(seed ^ 0x51AD));
  std::vector<ParamVector> centers;
  centers.reserve(n_samples);
  for (std::size_t j = 0; j < n_samples; ++j) {
    ParamVector c(dim);
    for (std::size_t i = 0; i < dim; ++i) c[i] = 1.0 + rng.normal();
    centers.push_back(std::move(c));
  }
  return std::make_unique<QuadraticTask>(std::move(centers));
}

// ---------------------------------------------------------------------------
// Logistic regression

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

LogisticTask::LogisticTask(Dataset data, double weight_decay)
    : data_(std::move(data)), weight_decay_(weight_decay) {
  if (data_.size() == 0) throw InvalidArgument("logistic: no samples");
  features_ = data_.feature_dim();
  if (features_ < 1) throw InvalidArgument("logistic: need at least one feature");
  for (std::size_t j = 0; j < data_.size(); ++j) {
    if (data_.features[j].size() != features_) {
      throw InvalidArgument("logistic: ragged feature rows");
    }
    if (data_.labels[j] != 0 && data_.labels[j] != 1) {
      throw InvalidArgument("logistic: labels must be 0 or 1");
    }
  }
}

double LogisticTask::logit(const ParamVector& x, std::size_t j) const {
  const auto& a = data_.features[j];
  double z = x[features_];
  for (std::size_t i = 0; i < features_; ++i) z += x[i] * a[i];
  return z;
}

double LogisticTask::sample_loss(const ParamVector& x, std::size_t j) const {
  const double z = logit(x, j);
  return softplus(z) - data_.labels[j] * z;
}

void LogisticTask::add_sample_grad(const ParamVector& x, std::size_t j,
                                   ParamVector& grad_out) const {
  const double r = sigmoid(logit(x, j)) - data_.labels[j];
  const auto& a = data_.features[j];
  for (std::size_t i = 0; i < features_; ++i) grad_out[i] += r * a[i];
  grad_out[features_] += r;
}

double LogisticTask::regularizer(const ParamVector& x) const {
  return 0.5 * weight_decay_ * vec_dot(x, x);
}

void LogisticTask::add_regularizer_grad(const ParamVector& x,
                                        ParamVector& grad_out) const {
  for (std::size_t i = 0; i < x.size(); ++i) grad_out[i] += weight_decay_ * x[i];
}

double LogisticTask::accuracy(const ParamVector& x) const {
  std::size_t hits = 0;
  for (std::size_t j = 0; j < data_.size(); ++j) {
    const int predicted = logit(x, j) >= 0 ? 1 : 0;
    if (predicted == data_.labels[j]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data_.size());
}

std::unique_ptr<LogisticTask> make_logistic(std::size_t dim,
                                            std::size_t n_samples,
                                            uint64_t seed, double separation) {
  if (dim < 2) throw InvalidArgument("logistic: dim must be >= 2");
  if (n_samples < 1) throw InvalidArgument("logistic: samples must be >= 1");
  Rng64 rng(splitmix64_mix(seed ^ 0x1061));
  std::vector<double> direction(dim);
  double norm = 0.0;
  for (auto& v : direction) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (auto& v : direction) v /= norm;

  Dataset data;
  for (std::size_t j = 0; j < n_samples; ++j) {
    const int label = static_cast<int>(rng.bounded(2));
    const double offset = (label == 1 ? 0.5 : -0.5) * separation;
    std::vector<double> row(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      row[i] = offset * direction[i] + rng.normal();
    }
    data.features.push_back(std::move(row));
    data.labels.push_back(label);
  }
  return std::make_unique<LogisticTask>(std::move(data));
}

// ---------------------------------------------------------------------------
// MLP

MlpTask::MlpTask(Dataset data, std::size_t hidden, std::size_t classes,
                 uint64_t init_seed)
    : data_(std::move(data)), hidden_(hidden), classes_(classes) {
  if (hidden_ < 1) throw InvalidArgument("mlp: hidden must be >= 1");
  if (classes_ < 2) throw InvalidArgument("mlp: classes must be >= 2");
  if (data_.size() == 0) throw InvalidArgument("mlp: no samples");
  in_ = data_.feature_dim();
  if (in_ < 1) throw InvalidArgument("mlp: need at least one feature");
  for (std::size_t j = 0; j < data_.size(); ++j) {
    if (data_.features[j].size() != in_) throw InvalidArgument("mlp: ragged rows");
    if (data_.labels[j] < 0 || static_cast<std::size_t>(data_.labels[j]) >= classes_) {
      throw InvalidArgument("mlp: label out of range");
    }
  }

  Rng64 rng(splitmix64_mix(init_seed ^ 0x3A1F));
  initial_ = ParamVector(dim());
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(in_));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
  const std::size_t layer1 = hidden_ * in_ + hidden_;
  for (std::size_t i = 0; i < dim(); ++i) {
    const double bound = i < layer1 ? bound1 : bound2;
    initial_[i] = (2.0 * rng.uniform() - 1.0) * bound;
  }
}

std::size_t MlpTask::dim() const {
  return hidden_ * in_ + hidden_ + classes_ * hidden_ + classes_;
}

MlpTask::Activations MlpTask::run(const ParamVector& x,
                                  std::span<const double> input) const {
  const double* w1 = x.data();
  const double* b1 = w1 + hidden_ * in_;
  const double* w2 = b1 + hidden_;
  const double* b2 = w2 + classes_ * hidden_;

  Activations act;
  act.hidden.resize(hidden_);
  for (std::size_t h = 0; h < hidden_; ++h) {
    double pre = b1[h];
    for (std::size_t i = 0; i < in_; ++i) pre += w1[h * in_ + i] * input[i];
    act.hidden[h] = std::tanh(pre);
  }
  act.probs.resize(classes_);
  double top = -INFINITY;
  for (std::size_t c = 0; c < classes_; ++c) {
    double z = b2[c];
    for (std::size_t h = 0; h < hidden_; ++h) z += w2[c * hidden_ + h] * act.hidden[h];
    act.probs[c] = z;
    top = std::max(top, z);
  }
  double total = 0.0;
  for (auto& p : act.probs) {
    p = std::exp(p - top);
    total += p;
  }
  for (auto& p : act.probs) p /= total;
  return act;
}

std::vector<double> MlpTask::forward(const ParamVector& x,
                                     std::span<const double> input) const {
  if (x.size() != dim() || input.size() != in_) {
    throw InvalidArgument("mlp forward: shape mismatch");
  }
  return run(x, input).probs;
}

double MlpTask::sample_loss(const ParamVector& x, std::size_t j) const {
  const auto act = run(x, data_.features[j]);
  return -std::log(std::max(act.probs[data_.labels[j]], 1e-300));
}

void MlpTask::add_sample_grad(const ParamVector& x, std::size_t j,
                              ParamVector& grad_out) const {
  const auto& input = data_.features[j];
  const auto act = run(x, input);
  const double* w2 = x.data() + hidden_ * in_ + hidden_;

  double* g_w1 = grad_out.data();
  double* g_b1 = g_w1 + hidden_ * in_;
  double* g_w2 = g_b1 + hidden_;
  double* g_b2 = g_w2 + classes_ * hidden_;

  std::vector<double> delta_out(classes_);
  for (std::size_t c = 0; c < classes_; ++c) {
    delta_out[c] = act.probs[c] - (static_cast<int>(c) == data_.labels[j] ? 1.0 : 0.0);
    g_b2[c] += delta_out[c];
    for (std::size_t h = 0; h < hidden_; ++h) {
      g_w2[c * hidden_ + h] += delta_out[c] * act.hidden[h];
    }
  }
  for (std::size_t h = 0; h < hidden_; ++h) {
    double back = 0.0;
    for (std::size_t c = 0; c < classes_; ++c) back += w2[c * hidden_ + h] * delta_out[c];
    const double delta_h = back * (1.0 - act.hidden[h] * act.hidden[h]);
    g_b1[h] += delta_h;
    for (std::size_t i = 0; i < in_; ++i) g_w1[h * in_ + i] += delta_h * input[i];
  }
}

double MlpTask::accuracy(const ParamVector& x) const {
  std::size_t hits = 0;
  for (std::size_t j = 0; j < data_.size(); ++j) {
    const auto probs = run(x, data_.features[j]).probs;
    const auto best = std::max_element(probs.begin(), probs.end()) - probs.begin();
    if (best == data_.labels[j]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data_.size());
}

std::unique_ptr<MlpTask> make_mlp(std::size_t in_dim, std::size_t hidden,
                                  std::size_t classes, std::size_t n_samples,
                                  uint64_t seed) {
  if (in_dim < 1) throw InvalidArgument("mlp: in_dim must be >= 1");
  if (classes < 2) throw InvalidArgument("mlp: classes must be >= 2");
  if (n_samples < 1) throw InvalidArgument("mlp: samples must be >= 1");
  Rng64 rng(splitmix64_mix(seed ^ 0x0B10B5));
  std::vector<std::vector<double>> means(classes, std::vector<double>(in_dim));
  for (auto& mean : means) {
    for (auto& v : mean) v = 2.0 * rng.normal();
  }
  Dataset data;
  for (std::size_t j = 0; j < n_samples; ++j) {
    const auto label = static_cast<int>(rng.bounded(classes));
    std::vector<double> row(in_dim);
    for (std::size_t i = 0; i < in_dim; ++i) row[i] = means[label][i] + rng.normal();
    data.features.push_back(std::move(row));
    data.labels.push_back(label);
  }
  return std::make_unique<MlpTask>(std::move(data), hidden, classes, seed);
}

// ---------------------------------------------------------------------------

SmoothnessEstimate estimate_constants(const Task& task, std::size_t probe_count,
                                      uint64_t seed, const ProbeOptions& opts) {
  if (probe_count < 2) throw InvalidArgument("estimate_constants: need >= 2 probes");
  if (!(opts.radius > 0.0)) throw InvalidArgument("estimate_constants: radius must be > 0");
  const ParamVector center = opts.center.value_or(task.initial_params());
  if (center.size() != task.dim()) {
    throw InvalidArgument("estimate_constants: centre has wrong length");
  }

  Rng64 rng(splitmix64_mix(seed ^ 0xC0457));
  const std::size_t d = task.dim();
  std::vector<ParamVector> probes;
  std::vector<ParamVector> grads;
  probes.reserve(probe_count);
  for (std::size_t p = 0; p < probe_count; ++p) {
    ParamVector dir(d);
    double norm = 0.0;
    while (norm == 0.0) {
      for (std::size_t i = 0; i < d; ++i) dir[i] = rng.normal();
      norm = vec_norm(dir);
    }
    const double r = opts.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    probes.push_back(vec_axpy(r / norm, dir, center));
    grads.push_back(task.full_grad(probes.back()));
  }

  SmoothnessEstimate est;
  for (std::size_t i = 0; i < probe_count; ++i) {
    est.M_hat = std::max(est.M_hat, vec_norm(grads[i]));
    for (std::size_t j = i + 1; j < probe_count; ++j) {
      const double dx = vec_distance(probes[i], probes[j]);
      if (dx == 0.0) continue;
      est.L_hat = std::max(est.L_hat, vec_distance(grads[i], grads[j]) / dx);
    }
  }
  return est;
}

}  // namespace sesgd
