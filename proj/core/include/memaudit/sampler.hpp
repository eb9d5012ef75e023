#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "memaudit/image.hpp"
#include "memaudit/model.hpp"
#include "memaudit/schedule.hpp"

namespace memaudit {

struct GenerationRequest {
  std::uint64_t seed = 0;
  std::optional<int> label;
  int count = 1;
};

// Iterative sampler. Starts from z_T ~ N(0,I) seeded by (req.seed, index) and
// walks the timestep sequence T, T-stride, ... down to 0; a shorter final
// jump is taken when stride does not divide T. Outputs are clamped to the
// model range and mapped back to [0,1]. Pure function of (theta, schedule,
// request, stride).
std::vector<Image> sample(const DenoiserModel& m, const NoiseSchedule& s,
                          const GenerationRequest& req, int stride = 1);

struct InpaintConfig {
  int jump_len = 10;
  int n_resample = 2;
  int stride = 1;
};

// Masked-region resampling sampler: at every reverse step known pixels are
// replaced by the forward-noised original and unknown pixels by the model's
// reverse update, with periodic re-noising jumps. The known region of the
// result equals x_masked exactly. mask is per-pixel, true (nonzero) = known.
Image inpaint(const DenoiserModel& m, const NoiseSchedule& s,
              const Image& x_masked, const std::vector<std::uint8_t>& mask,
              std::uint64_t seed, const InpaintConfig& cfg = {});

}  // namespace memaudit
