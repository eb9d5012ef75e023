#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include <json.hpp>

#include "memaudit/dataset.hpp"
#include "memaudit/model.hpp"
#include "memaudit/schedule.hpp"

namespace memaudit {

struct TrainingConfig {
  long steps = 0;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  bool flip_augment = false;
  std::optional<double> clip_norm;         // per-example gradient 2-norm bound
  std::optional<double> noise_multiplier;  // relative noise on clipped sums
  long checkpoint_every = 0;               // 0 disables intermediate checkpoints

  void validate() const;
  nlohmann::json to_json() const;
  static TrainingConfig from_json(const nlohmann::json& j);
};

// Optimizer hyperparameters (second-moment adaptive update, no momentum);
// recorded verbatim in the checkpoint header.
struct OptimizerConfig {
  double second_moment_decay = 0.99;
  double epsilon = 1e-8;
};

// Invoked at every emitted checkpoint (step multiples of checkpoint_every and
// the final step).
using CheckpointSink = std::function<void(long step, const DenoiserModel&)>;

// Trains a fresh model on the dataset by stochastic gradient steps on the
// denoising objective: uniform t in [1,T] and fresh Gaussian eps per batch
// element. Fully deterministic given cfg.seed, independent of thread count.
DenoiserModel train(const Dataset& data, const TrainingConfig& cfg,
                    const NoiseSchedule& s, const ArchConfig& arch,
                    const CheckpointSink& sink = {});

}  // namespace memaudit
