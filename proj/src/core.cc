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

#include "sesgd/core.h"

#include <cmath>
#include <numbers>
#include <string>

namespace sesgd {

uint64_t Rng64::next() {
  state_ += 0x9E3779B97F4A7C15ULL;
  uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

uint64_t Rng64::bounded(uint64_t bound) {
  if (bound == 0) throw InvalidArgument("rng_bounded: bound must be >= 1");
  // 2^64 mod bound; values at or above 2^64 - rem would bias the modulus.
  const uint64_t rem = (0 - bound) % bound;
  const uint64_t limit = 0 - rem;
  for (;;) {
    const uint64_t x = next();
    if (rem == 0 || x < limit) return x % bound;
  }
}

double Rng64::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng64::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t splitmix64_mix(uint64_t seed) {
  Rng64 rng(seed);
  return rng.next();
}

ParamVector::ParamVector(std::vector<double> values)
    : values_(std::move(values)) {}

ParamVector::ParamVector(std::initializer_list<double> values)
    : values_(values) {}

void ParamVector::check_finite(const char* where) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NumericError(std::string(where) + ": non-finite value at index " +
                         std::to_string(i));
    }
  }
}

namespace {

void require_same_length(const ParamVector& x, const ParamVector& y,
                         const char* where) {
  if (x.size() != y.size()) {
    throw InvalidArgument(std::string(where) + ": length mismatch (" +
                          std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  }
}

}  // namespace

ParamVector vec_axpy(double a, const ParamVector& x, const ParamVector& y) {
  ParamVector out = y;
  vec_axpy_inplace(a, x, out);
  return out;
}

void vec_axpy_inplace(double a, const ParamVector& x, ParamVector& y) {
  require_same_length(x, y, "vec_axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + y[i];
  y.check_finite("vec_axpy");
}

void vec_scale_inplace(double a, ParamVector& x) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= a;
  x.check_finite("vec_scale");
}

double vec_dot(const ParamVector& x, const ParamVector& y) {
  require_same_length(x, y, "vec_dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double vec_norm(const ParamVector& x) { return std::sqrt(vec_dot(x, x)); }

double vec_distance(const ParamVector& x, const ParamVector& y) {
  require_same_length(x, y, "vec_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

ParamVector vec_mean(std::span<const ParamVector> xs) {
  if (xs.empty()) throw InvalidArgument("vec_mean: no inputs");
  ParamVector out = xs[0];
  for (std::size_t r = 1; r < xs.size(); ++r) {
    require_same_length(xs[r], out, "vec_mean");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += xs[r][i];
  }
  const double m = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= m;
  out.check_finite("vec_mean");
  return out;
}

WorkerId WorkerId::checked(uint32_t id, uint32_t world_size) {
  if (id >= world_size) {
    throw InvalidArgument("worker id " + std::to_string(id) +
                          " out of range for world size " +
                          std::to_string(world_size));
  }
  return WorkerId{id};
}

void NetworkConfig::validate() const {
  if (!(bandwidth_nu > 0.0)) {
    throw InvalidArgument("network: bandwidth must be > 0");
  }
  if (!(latency_tau >= 0.0) || !std::isfinite(latency_tau)) {
    throw InvalidArgument("network: latency must be finite and >= 0");
  }
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "ring-sgd") return Algorithm::kRingSgd;
  if (name == "local-sgd") return Algorithm::kLocalSgd;
  if (name == "sesgd") return Algorithm::kSesgd;
  if (name == "local-sesgd") return Algorithm::kLocalSesgd;
  throw InvalidArgument("unknown algorithm '" + name + "'");
}

const char* algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kRingSgd:
      return "ring-sgd";
    case Algorithm::kLocalSgd:
      return "local-sgd";
    case Algorithm::kSesgd:
      return "sesgd";
    case Algorithm::kLocalSesgd:
      return "local-sesgd";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (n < 1) throw InvalidArgument("train: workers must be >= 1");
  if (k < 1 || k > n) throw InvalidArgument("train: groups must be in [1, workers]");
  if (n % k != 0) {
    throw InvalidArgument("train: groups (" + std::to_string(k) +
                          ") must divide workers (" + std::to_string(n) + ")");
  }
  if (b < 1) throw InvalidArgument("train: batch must be >= 1");
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw InvalidArgument("train: learning rate must be finite and > 0");
  }
  if (local_period < 1) throw InvalidArgument("train: local_period must be >= 1");
  if (!(local_momentum >= 0.0 && local_momentum < 1.0)) {
    throw InvalidArgument("train: momentum must be in [0, 1)");
  }
}

}  // namespace sesgd
