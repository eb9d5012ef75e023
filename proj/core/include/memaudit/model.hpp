#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "memaudit/image.hpp"
#include "memaudit/schedule.hpp"

namespace memaudit {

enum class Conditioning { Unconditional, ClassConditional };

std::string to_string(Conditioning c);
Conditioning conditioning_from_string(const std::string& s);

// Fully connected noise predictor with sinusoidal time embedding and, for
// class-conditional models, an additive learned class embedding.
struct ArchConfig {
  int h = 16;
  int w = 16;
  int c = 1;
  std::vector<int> hidden = {256, 256};
  int time_embed_dim = 32;
  Conditioning conditioning = Conditioning::Unconditional;
  int num_classes = 0;

  int input_dim() const { return h * w * c; }
  void validate() const;
  bool operator==(const ArchConfig&) const = default;
};

// Sinusoidal embedding of an integer timestep.
std::vector<double> time_embedding(int t, int dim);

class DenoiserModel {
 public:
  DenoiserModel() = default;
  explicit DenoiserModel(ArchConfig arch);

  static DenoiserModel random_init(const ArchConfig& arch, std::uint64_t seed);

  const ArchConfig& arch() const { return arch_; }
  std::vector<double>& theta() { return theta_; }
  const std::vector<double>& theta() const { return theta_; }
  std::size_t param_count() const { return theta_.size(); }

  // epsilon prediction on a flat model-range input. Deterministic. The
  // network itself predicts the clean image x0; the epsilon estimate is the
  // algebraic rearrangement (z - sqrt(a_t) x0) / sqrt(1 - a_t), which keeps
  // the learned map near unit gain at every timestep. At t = 0 the
  // convention is z - x0 (no noise to invert).
  std::vector<double> predict_noise(const std::vector<double>& z,
                                    const NoiseSchedule& s, int t,
                                    std::optional<int> label = {}) const;

  // Eq-1-style denoising loss on a single example, mean over pixel
  // dimensions. When grad is non-null it receives dL/dtheta.
  double loss_and_grad(const NoiseSchedule& s, const std::vector<double>& x_model,
                       int t, const std::vector<double>& eps,
                       std::optional<int> label, std::vector<double>* grad) const;

 private:
  struct Layer {
    int in = 0;
    int out = 0;
    std::size_t w_off = 0;  // out x in row-major
    std::size_t b_off = 0;
  };

  void build_layout();
  std::vector<double> make_input(const std::vector<double>& z, int t,
                                 std::optional<int> label) const;

  ArchConfig arch_;
  std::vector<Layer> layers_;
  std::size_t class_embed_off_ = 0;  // num_classes x time_embed_dim
  std::size_t total_params_ = 0;
  std::vector<double> theta_;
};

// Denoising loss on an image stored in [0,1]; converted to model range
// internally. Throws on shape mismatch or t outside [0, T].
double diffusion_loss(const DenoiserModel& m, const NoiseSchedule& s,
                      const Image& x, int t, const std::vector<double>& eps,
                      std::optional<int> label = {});

}  // namespace memaudit
