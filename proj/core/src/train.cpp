#include "memaudit/train.hpp"

#include <cmath>

#include "memaudit/error.hpp"
#include "memaudit/parallel.hpp"
#include "memaudit/rng.hpp"

namespace memaudit {

void TrainingConfig::validate() const {
  if (steps < 0) throw_error(ErrorCategory::Config, "steps must be >= 0");
  if (batch_size < 1) throw_error(ErrorCategory::Config, "batch_size must be >= 1");
  if (!(learning_rate > 0.0))
    throw_error(ErrorCategory::Config, "learning_rate must be > 0");
  if (clip_norm && !(*clip_norm > 0.0))
    throw_error(ErrorCategory::Config, "clip_norm must be > 0 when present");
  if (noise_multiplier && !clip_norm)
    throw_error(ErrorCategory::Config,
                "noise_multiplier requires clip_norm (clipping precedes noising)");
  if (noise_multiplier && !(*noise_multiplier >= 0.0))
    throw_error(ErrorCategory::Config, "noise_multiplier must be >= 0");
  if (checkpoint_every < 0)
    throw_error(ErrorCategory::Config, "checkpoint_every must be >= 0");
}

nlohmann::json TrainingConfig::to_json() const {
  nlohmann::json j = {{"steps", steps},
                      {"batch_size", batch_size},
                      {"learning_rate", learning_rate},
                      {"seed", seed},
                      {"flip_augment", flip_augment},
                      {"checkpoint_every", checkpoint_every}};
  if (clip_norm) j["clip_norm"] = *clip_norm;
  if (noise_multiplier) j["noise_multiplier"] = *noise_multiplier;
  return j;
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
  TrainingConfig cfg;
  cfg.steps = j.value("steps", cfg.steps);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.flip_augment = j.value("flip_augment", cfg.flip_augment);
  cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
  if (j.contains("clip_norm")) cfg.clip_norm = j["clip_norm"].get<double>();
  if (j.contains("noise_multiplier"))
    cfg.noise_multiplier = j["noise_multiplier"].get<double>();
  cfg.validate();
  return cfg;
}

DenoiserModel train(const Dataset& data, const TrainingConfig& cfg,
                    const NoiseSchedule& s, const ArchConfig& arch,
                    const CheckpointSink& sink) {
  cfg.validate();
  if (data.images.empty())
    throw_error(ErrorCategory::Config, "train: dataset is empty");
  const int d = arch.input_dim();
  if (data.images[0].h != arch.h || data.images[0].w != arch.w ||
      data.images[0].c != arch.c)
    throw_error(ErrorCategory::Config, "train: dataset shape mismatch with arch");

  DenoiserModel model =
      DenoiserModel::random_init(arch, derive_seed(cfg.seed, "init", 0));
  if (cfg.steps == 0) {
    if (sink) sink(0, model);
    return model;
  }

  // Model-range copies of the dataset (and flipped variants when augmenting).
  std::vector<std::vector<double>> flat(data.size());
  std::vector<std::vector<double>> flat_flipped;
  for (std::size_t i = 0; i < data.size(); ++i)
    flat[i] = to_model_range(data.images[i]);
  if (cfg.flip_augment) {
    flat_flipped.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      flat_flipped[i] = to_model_range(flip_horizontal(data.images[i]));
  }

  Rng rng(derive_seed(cfg.seed, "train", 0));
  const std::size_t p = model.param_count();
  const OptimizerConfig opt;
  std::vector<double> second_moment(p, 0.0);

  const int B = cfg.batch_size;
  std::vector<std::vector<double>> eps(B);
  std::vector<std::vector<double>> grads(B);
  std::vector<double> losses(B);
  std::vector<std::size_t> idx(B);
  std::vector<int> ts(B);
  std::vector<char> flips(B);
  std::vector<double> agg(p);

  if (sink && cfg.checkpoint_every > 0) sink(0, model);

  for (long step = 1; step <= cfg.steps; ++step) {
    // Draw all per-step randomness sequentially so the result is independent
    // of how the gradient work is scheduled.
    for (int b = 0; b < B; ++b) {
      idx[b] = rng.uniform_index(data.size());
      ts[b] = 1 + static_cast<int>(rng.uniform_index(s.T));
      flips[b] = cfg.flip_augment && rng.coin_flip();
      eps[b].resize(d);
      rng.fill_gaussian(eps[b]);
    }

    parallel_for(
        B,
        [&](std::size_t b) {
          const std::vector<double>& x =
              flips[b] ? flat_flipped[idx[b]] : flat[idx[b]];
          std::optional<int> label;
          if (data.labels && arch.conditioning == Conditioning::ClassConditional)
            label = (*data.labels)[idx[b]];
          losses[b] = model.loss_and_grad(s, x, ts[b], eps[b], label, &grads[b]);
          if (cfg.clip_norm) {
            double norm_sq = 0.0;
            for (double g : grads[b]) norm_sq += g * g;
            const double norm = std::sqrt(norm_sq);
            if (norm > *cfg.clip_norm) {
              const double scale = *cfg.clip_norm / norm;
              for (double& g : grads[b]) g *= scale;
            }
          }
        },
        global_thread_count());

    double batch_loss = 0.0;
    for (int b = 0; b < B; ++b) batch_loss += losses[b];
    batch_loss /= B;
    if (!std::isfinite(batch_loss))
      throw_error(ErrorCategory::Training,
                  "non-finite loss at step " + std::to_string(step));

    // Sum clipped per-example gradients in index order, noise the sum, then
    // average.
    std::fill(agg.begin(), agg.end(), 0.0);
    for (int b = 0; b < B; ++b)
      for (std::size_t i = 0; i < p; ++i) agg[i] += grads[b][i];
    if (cfg.noise_multiplier && *cfg.noise_multiplier > 0.0) {
      const double stddev = *cfg.noise_multiplier * *cfg.clip_norm;
      for (std::size_t i = 0; i < p; ++i) agg[i] += stddev * rng.gaussian();
    }
    for (std::size_t i = 0; i < p; ++i) agg[i] /= B;

    // Cosine decay from the configured peak to a tenth of it; the RMSProp
    // stationary loss floor scales with the step size, so annealing is what
    // lets long runs actually converge.
    const double cosine =
        0.5 * (1.0 + std::cos(M_PI * static_cast<double>(step) / cfg.steps));
    const double lr = cfg.learning_rate * (0.1 + 0.9 * cosine);
    std::vector<double>& theta = model.theta();
    for (std::size_t i = 0; i < p; ++i) {
      second_moment[i] = opt.second_moment_decay * second_moment[i] +
                         (1.0 - opt.second_moment_decay) * agg[i] * agg[i];
      theta[i] -= lr * agg[i] / (std::sqrt(second_moment[i]) + opt.epsilon);
    }
    for (double v : theta) {
      if (!std::isfinite(v))
        throw_error(ErrorCategory::Training,
                    "non-finite parameter at step " + std::to_string(step));
    }

    if (sink && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0)
      sink(step, model);
  }
  if (sink && (cfg.checkpoint_every == 0 || cfg.steps % cfg.checkpoint_every != 0))
    sink(cfg.steps, model);
  return model;
}

}  // namespace memaudit
