#include "memaudit/schedule.hpp"

#include <cmath>

namespace memaudit {

void NoiseSchedule::validate() const {
  if (T < 1 || a.size() != static_cast<std::size_t>(T) + 1 ||
      sigma.size() != static_cast<std::size_t>(T) + 1)
    throw_error(ErrorCategory::Config, "schedule arrays must have size T+1");
  if (a[0] != 1.0)
    throw_error(ErrorCategory::Config, "a_0 must be exactly 1");
  for (int t = 1; t <= T; ++t) {
    if (!(a[t] < a[t - 1]))
      throw_error(ErrorCategory::Config, "a must be strictly decreasing");
    if (sigma[t] < 0.0)
      throw_error(ErrorCategory::Config, "sigma must be non-negative");
  }
  if (sigma[1] != 0.0)
    throw_error(ErrorCategory::Config, "sigma_1 must be 0");
}

NoiseSchedule make_schedule(int T, double beta_min, double beta_max) {
  if (T < 1)
    throw_error(ErrorCategory::Config, "T must be >= 1");
  if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0))
    throw_error(ErrorCategory::Config,
                "need 0 < beta_min <= beta_max < 1");

  NoiseSchedule s;
  s.T = T;
  s.a.resize(T + 1);
  s.sigma.resize(T + 1);
  s.a[0] = 1.0;
  s.sigma[0] = 0.0;
  for (int t = 1; t <= T; ++t) {
    const double beta =
        T == 1 ? beta_max
               : beta_min + (beta_max - beta_min) * (t - 1) / double(T - 1);
    s.a[t] = s.a[t - 1] * (1.0 - beta);
    // Posterior deviation; exactly 0 at t = 1 since 1 - a_0 = 0.
    s.sigma[t] = std::sqrt((1.0 - s.a[t - 1]) / (1.0 - s.a[t]) * beta);
  }
  s.sigma[1] = 0.0;
  s.validate();
  return s;
}

std::vector<double> add_noise(const std::vector<double>& x, int t,
                              const std::vector<double>& eps,
                              const NoiseSchedule& s) {
  if (x.size() != eps.size())
    throw_error(ErrorCategory::Argument, "add_noise: shape mismatch");
  if (t < 0 || t > s.T)
    throw_error(ErrorCategory::Argument, "add_noise: t out of [0, T]");
  const double signal = std::sqrt(s.a[t]);
  const double noise = std::sqrt(1.0 - s.a[t]);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = signal * x[i] + noise * eps[i];
  return out;
}

}  // namespace memaudit
