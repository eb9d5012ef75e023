#pragma once

#include <cstdint>
#include <vector>

#include "memaudit/membership.hpp"
#include "memaudit/sampler.hpp"

namespace memaudit {

// Known-pixel mask generator (true = known). LeftHalf masks OUT the left
// half; CentralFraction masks out a centered rectangle covering the given
// fraction of pixels; Random masks out a seeded random pixel subset.
struct MaskSpec {
  enum class Kind { LeftHalf, CentralFraction, Random };
  Kind kind = Kind::LeftHalf;
  double fraction = 0.6;  // masked-out fraction for CentralFraction / Random
  std::uint64_t seed = 0;

  std::vector<std::uint8_t> build(int h, int w, int c) const;
};

struct ReconstructionItem {
  Image image;
  double main_loss = 0.0;
  double support_loss = 0.0;
  double contrastive = 0.0;  // main / support, lower = more member-evidence
  double l2_masked = 0.0;    // l2 to target over the masked (unknown) region
  double l2_full = 0.0;
};

struct ReconstructionSet {
  int target_id = -1;
  Image target;
  std::vector<std::uint8_t> mask;  // known pixels
  std::vector<ReconstructionItem> items;
  bool scored = false;
};

// n inpaintings of the masked target under distinct derived seeds. The known
// region of every reconstruction equals the target exactly.
ReconstructionSet generate_reconstructions(const DenoiserModel& main_model,
                                           const NoiseSchedule& s,
                                           const Image& target, int target_id,
                                           const MaskSpec& mask, int n,
                                           std::uint64_t seed,
                                           const InpaintConfig& sampler_cfg = {});

// Fills contrastive scores (main loss / support loss at timestep t) and the
// l2-to-target columns, then sorts items ascending by score. The caller must
// have verified the support model is OUT for the target (see
// verify_support_out).
void score_contrastive(ReconstructionSet& set, const DenoiserModel& main_model,
                       const DenoiserModel& support_model,
                       const NoiseSchedule& s, int t, int n_noise,
                       std::uint64_t noise_seed);

// Throws a config error unless the ensemble member was trained without the
// example.
void verify_support_out(const ShadowEnsemble& ensemble, int model_index,
                        int example_index);

struct TargetModels {
  const DenoiserModel* in_model = nullptr;   // trained on the target
  const DenoiserModel* out_model = nullptr;  // not trained on the target
  const DenoiserModel* support = nullptr;    // OUT; contrastive denominator
};

struct TargetOutcome {
  int target_id;
  double in_mean_masked_l2;   // mean top-k masked-region l2, IN model
  double out_mean_masked_l2;  // same, OUT model
  double in_mean_full_l2;
  double out_mean_full_l2;
};

struct InpaintAttackConfig {
  MaskSpec mask;
  int n = 200;
  int top_k = 10;
  int t = 0;  // 0 = max(1, T/10)
  int n_noise = 5;
  InpaintConfig sampler;
  std::uint64_t seed = 0;
};

// Paired IN/OUT reconstruction quality per target: mean masked-region l2 of
// the top_k contrastively ranked reconstructions.
std::vector<TargetOutcome> evaluate_attack(
    const std::vector<std::pair<int, Image>>& targets,
    const std::vector<TargetModels>& models, const NoiseSchedule& s,
    const InpaintAttackConfig& cfg);

}  // namespace memaudit
