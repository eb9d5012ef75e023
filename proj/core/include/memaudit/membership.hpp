#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memaudit/dataset.hpp"
#include "memaudit/model.hpp"
#include "memaudit/schedule.hpp"
#include "memaudit/train.hpp"

namespace memaudit {

struct ShadowEnsemble {
  std::vector<DenoiserModel> models;
  // masks[m][e] nonzero iff example e was IN for model m. Each row selects
  // exactly floor(split * N) examples.
  std::vector<std::vector<std::uint8_t>> masks;
  double split = 0.5;
  std::string base_dataset_id;

  bool covers_all_examples() const;
};

// Trains `count` models on independent seeded random splits. For ensembles of
// size >= 4 the mask draw is repeated until every example is IN for at least
// one model and OUT for at least one.
ShadowEnsemble train_shadow_models(const Dataset& data, int count, double split,
                                   const TrainingConfig& cfg,
                                   const NoiseSchedule& s,
                                   const ArchConfig& arch);

// Monte-Carlo denoising loss: mean over n_noise seeded eps draws; with
// use_flip each draw is also evaluated on the horizontally flipped image
// (2*n_noise evaluations, same eps reused).
double averaged_loss(const DenoiserModel& m, const NoiseSchedule& s,
                     const Image& x, int t, int n_noise, bool use_flip,
                     std::uint64_t noise_seed);

// Member iff loss < tau.
std::vector<bool> loss_threshold_attack(const std::vector<double>& losses,
                                        double tau);

// Threshold maximizing accuracy over a labeled calibration set.
double choose_tau(const std::vector<double>& losses,
                  const std::vector<bool>& labels);

struct LiRAStats {
  std::vector<double> in_losses;
  std::vector<double> out_losses;
  double mu_in = 0.0, sigma_in = 0.0;
  double mu_out = 0.0, sigma_out = 0.0;
};

// Fits per-side Gaussians with a variance floor; a side with fewer than two
// samples falls back to the pooled variance of both sides.
LiRAStats fit_lira_stats(std::vector<double> in_losses,
                         std::vector<double> out_losses);

// Log-density ratio log p_in(l*) - log p_out(l*); positive leans member.
double lira_score(double l_star, const LiRAStats& stats);

struct AttackScore {
  int example_id;
  double score;  // higher = more member-like
  bool is_member;
};

struct AttackScoreSet {
  std::vector<AttackScore> entries;
  std::string attack_id;
  int t = 0;
  int n_noise = 1;
  bool use_flip = false;
};

struct LiRAConfig {
  int t = 0;  // 0 = default max(1, T/10)
  int n_noise = 1;
  bool use_flip = false;
  std::uint64_t noise_seed = 0;
  bool per_example_variance = true;  // false = pooled global variance
};

// Full likelihood-ratio attack of the target model against every dataset
// example, with shadow statistics from the ensemble. target_membership gives
// the evaluation labels.
AttackScoreSet run_lira(const ShadowEnsemble& ensemble,
                        const DenoiserModel& target, const Dataset& data,
                        const NoiseSchedule& s,
                        const std::vector<std::uint8_t>& target_membership,
                        const LiRAConfig& cfg);

struct RocPoint {
  double fpr;
  double tpr;
  double threshold;
};

// Exact empirical ROC by threshold sweep over sorted unique scores.
std::vector<RocPoint> roc_curve(const AttackScoreSet& scores);

// Conservative step-function lookup: highest TPR among points with
// FPR <= fpr (no interpolation).
double tpr_at_fpr(const std::vector<RocPoint>& curve, double fpr);

double roc_auc(const std::vector<RocPoint>& curve);

// TPR at the given FPR for each timestep in t_list.
std::vector<std::pair<int, double>> timestep_sweep(
    const ShadowEnsemble& ensemble, const DenoiserModel& target,
    const Dataset& data, const NoiseSchedule& s,
    const std::vector<std::uint8_t>& target_membership,
    const std::vector<int>& t_list, double fpr, const LiRAConfig& base_cfg);

struct ProgressPoint {
  long step;
  double tpr;
};

struct TrainingProgressResult {
  std::vector<ProgressPoint> series;
  // First checkpoint step at which each member example is flagged at the
  // evaluation FPR; -1 when never flagged.
  std::vector<std::pair<int, long>> first_success_step;
};

TrainingProgressResult training_progress_attack(
    const std::vector<std::pair<long, DenoiserModel>>& checkpoints,
    const ShadowEnsemble& ensemble, const Dataset& data, const NoiseSchedule& s,
    const std::vector<std::uint8_t>& target_membership, double fpr,
    const LiRAConfig& cfg);

}  // namespace memaudit
