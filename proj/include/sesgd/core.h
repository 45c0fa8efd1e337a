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

#ifndef SESGD_CORE_H_
#define SESGD_CORE_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sesgd {

// Precondition or configuration violation.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// splitmix64 generator. The output stream for a given seed is fixed on every
// platform, which is what lets workers agree on groups without talking.
class Rng64 {
 public:
  explicit Rng64(uint64_t seed) : state_(seed) {}

  uint64_t next();

  // Uniform integer in [0, bound) by rejection sampling. Throws on bound == 0.
  uint64_t bounded(uint64_t bound);

  // Uniform double in [0, 1) built from the top 53 bits.
  double uniform();
  // Standard normal via Box-Muller; consumes two words per call.
  double normal();

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
};

// First splitmix64 output for `seed`. Used to derive independent sub-seeds.
uint64_t splitmix64_mix(uint64_t seed);

// Free-function spellings of the generator operations.
inline uint64_t rng_next(Rng64& rng) { return rng.next(); }
inline uint64_t rng_bounded(Rng64& rng, uint64_t bound) {
  return rng.bounded(bound);
}

// Flat vector of model parameters or gradients. The length is fixed at
// construction and every arithmetic helper rejects mismatched lengths and
// non-finite results.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t len, double fill = 0.0)
      : values_(len, fill) {}
  explicit ParamVector(std::vector<double> values);
  ParamVector(std::initializer_list<double> values);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  const std::vector<double>& values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  bool operator==(const ParamVector& other) const = default;

  // Throws NumericError naming `where` if any entry is NaN or infinite.
  void check_finite(const char* where) const;

 private:
  std::vector<double> values_;
};

// a * x + y, evaluated in index order.
ParamVector vec_axpy(double a, const ParamVector& x, const ParamVector& y);
// y += a * x in place.
void vec_axpy_inplace(double a, const ParamVector& x, ParamVector& y);
void vec_scale_inplace(double a, ParamVector& x);
double vec_dot(const ParamVector& x, const ParamVector& y);
double vec_norm(const ParamVector& x);
double vec_distance(const ParamVector& x, const ParamVector& y);
// Elementwise mean, accumulated in input order then divided once.
ParamVector vec_mean(std::span<const ParamVector> xs);

struct WorkerId {
  uint32_t id = 0;

  // Throws if id >= world_size.
  static WorkerId checked(uint32_t id, uint32_t world_size);

  auto operator<=>(const WorkerId&) const = default;
};

struct NetworkConfig {
  double bandwidth_nu = 1.25e8;  // bytes per second
  double latency_tau = 1e-4;     // seconds per handshake

  void validate() const;
};

enum class Algorithm { kRingSgd, kLocalSgd, kSesgd, kLocalSesgd };

// "ring-sgd" | "local-sgd" | "sesgd" | "local-sesgd".
Algorithm parse_algorithm(const std::string& name);
const char* algorithm_name(Algorithm algorithm);

struct TrainConfig {
  uint32_t n = 1;           // workers
  uint32_t k = 1;           // groups; must divide n
  uint32_t b = 1;           // minibatch per worker
  uint64_t T = 1;           // iterations
  double eta = 0.1;
  uint64_t seed_sigma = 0;
  uint32_t local_period = 1;
  // Experimental: per-worker momentum buffers that are never communicated.
  double local_momentum = 0.0;

  // Checks every field invariant; T == 0 is accepted so that an empty run can
  // be expressed.
  void validate() const;
};

}  // namespace sesgd

#endif  // SESGD_CORE_H_
