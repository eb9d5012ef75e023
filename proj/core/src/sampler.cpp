#include "memaudit/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "memaudit/error.hpp"
#include "memaudit/rng.hpp"

namespace memaudit {

namespace {

// Noise scale for a reverse jump t -> t_next. Reduces to the schedule's
// posterior deviation for t_next = t-1 and vanishes when t_next = 0.
double jump_sigma(const NoiseSchedule& s, int t, int t_next) {
  const double a_t = s.a[t];
  const double a_n = s.a[t_next];
  return std::sqrt((1.0 - a_n) / (1.0 - a_t) * (1.0 - a_t / a_n));
}

// One reverse update t -> t_next on a flat model-range state.
void reverse_step(const DenoiserModel& m, const NoiseSchedule& s,
                  std::vector<double>& z, int t, int t_next,
                  std::optional<int> label, Rng& rng) {
  const std::vector<double> eps_hat = m.predict_noise(z, s, t, label);
  const double a_t = s.a[t];
  const double a_n = s.a[t_next];
  const double sqrt_a_t = std::sqrt(a_t);
  const double sqrt_one_minus_a_t = std::sqrt(1.0 - a_t);
  if (t_next == 0) {
    for (std::size_t i = 0; i < z.size(); ++i) {
      double x0 = (z[i] - sqrt_one_minus_a_t * eps_hat[i]) / sqrt_a_t;
      z[i] = std::clamp(x0, -1.0, 1.0);
    }
    return;
  }
  const double sigma = jump_sigma(s, t, t_next);
  const double dir = std::sqrt(std::max(0.0, 1.0 - a_n - sigma * sigma));
  const double sqrt_a_n = std::sqrt(a_n);
  for (std::size_t i = 0; i < z.size(); ++i) {
    double x0 = (z[i] - sqrt_one_minus_a_t * eps_hat[i]) / sqrt_a_t;
    x0 = std::clamp(x0, -1.0, 1.0);
    z[i] = sqrt_a_n * x0 + dir * eps_hat[i] + sigma * rng.gaussian();
  }
}

}  // namespace

std::vector<Image> sample(const DenoiserModel& m, const NoiseSchedule& s,
                          const GenerationRequest& req, int stride) {
  if (req.count < 1)
    throw_error(ErrorCategory::Argument, "sample: count must be >= 1");
  if (stride < 1 || stride > s.T)
    throw_error(ErrorCategory::Argument, "sample: stride must be in [1, T]");
  const ArchConfig& arch = m.arch();
  const int d = arch.input_dim();

  std::vector<Image> out(req.count);
  for (int k = 0; k < req.count; ++k) {
    Rng rng(derive_seed(req.seed, "sample", static_cast<std::uint64_t>(k)));
    std::vector<double> z(d);
    rng.fill_gaussian(z);
    for (int t = s.T; t > 0;) {
      const int t_next = std::max(0, t - stride);
      reverse_step(m, s, z, t, t_next, req.label, rng);
      t = t_next;
    }
    out[k] = from_model_range(z, arch.h, arch.w, arch.c);
  }
  return out;
}

Image inpaint(const DenoiserModel& m, const NoiseSchedule& s,
              const Image& x_masked, const std::vector<std::uint8_t>& mask,
              std::uint64_t seed, const InpaintConfig& cfg) {
  const ArchConfig& arch = m.arch();
  if (x_masked.h != arch.h || x_masked.w != arch.w || x_masked.c != arch.c)
    throw_error(ErrorCategory::Argument, "inpaint: image shape mismatch");
  if (mask.size() != x_masked.dim())
    throw_error(ErrorCategory::Argument, "inpaint: mask/image shape mismatch");
  if (cfg.jump_len < 1 || cfg.n_resample < 1 || cfg.stride < 1)
    throw_error(ErrorCategory::Argument, "inpaint: invalid config");

  const int d = arch.input_dim();
  const std::vector<double> x_model = to_model_range(x_masked);
  Rng rng(derive_seed(seed, "inpaint", 0));

  std::vector<double> z(d);
  rng.fill_gaussian(z);

  // Replace known pixels with the forward-noised original after each reverse
  // update; every jump_len timesteps, re-noise and redo the segment
  // (n_resample passes total).
  auto constrained_segment = [&](std::vector<double> state, int t_hi, int t_lo) {
    for (int t = t_hi; t > t_lo;) {
      const int t_next = std::max(t_lo, t - cfg.stride);
      reverse_step(m, s, state, t, t_next, std::nullopt, rng);
      const double sqrt_a = std::sqrt(s.a[t_next]);
      const double sqrt_na = std::sqrt(1.0 - s.a[t_next]);
      for (int i = 0; i < d; ++i) {
        if (mask[i])
          state[i] = sqrt_a * x_model[i] +
                     (t_next == 0 ? 0.0 : sqrt_na * rng.gaussian());
      }
      t = t_next;
    }
    return state;
  };

  for (int t = s.T; t > 0;) {
    const int t_lo = std::max(0, t - cfg.jump_len);
    std::vector<double> segment_result;
    for (int r = 0; r < cfg.n_resample; ++r) {
      segment_result = constrained_segment(z, t, t_lo);
      if (r + 1 < cfg.n_resample && t_lo > 0) {
        // Re-noise from t_lo back up to t for another pass.
        const double ratio = s.a[t] / s.a[t_lo];
        const double sq = std::sqrt(ratio);
        const double nq = std::sqrt(1.0 - ratio);
        std::vector<double> renoised(d);
        for (int i = 0; i < d; ++i)
          renoised[i] = sq * segment_result[i] + nq * rng.gaussian();
        z = std::move(renoised);
      }
    }
    z = std::move(segment_result);
    t = t_lo;
  }

  Image out = from_model_range(z, arch.h, arch.w, arch.c);
  // Copy known pixels verbatim so the known region matches bit-for-bit.
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.pixels[i] = x_masked.pixels[i];
  return out;
}

}  // namespace memaudit
