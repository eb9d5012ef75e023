#pragma once

#include <vector>

#include "memaudit/error.hpp"

namespace memaudit {

// Per-timestep cumulative signal coefficients a_t and sampler noise scales
// sigma_t for t in [0, T]. a_0 = 1 exactly, a strictly decreasing, sigma_1 = 0.
struct NoiseSchedule {
  int T = 0;
  std::vector<double> a;      // size T+1
  std::vector<double> sigma;  // size T+1

  void validate() const;
};

// Linear beta_t schedule from beta_min to beta_max over t = 1..T with
// a_t = prod_{s<=t}(1 - beta_s). sigma_t is the posterior deviation
// sqrt((1 - a_{t-1}) / (1 - a_t) * beta_t), which vanishes at t = 1.
NoiseSchedule make_schedule(int T, double beta_min, double beta_max);

// Forward noising: sqrt(a_t) * x + sqrt(1 - a_t) * eps, elementwise.
// x and eps are flat model-range vectors.
std::vector<double> add_noise(const std::vector<double>& x, int t,
                              const std::vector<double>& eps,
                              const NoiseSchedule& s);

}  // namespace memaudit
