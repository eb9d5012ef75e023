#include "memaudit/membership.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "memaudit/error.hpp"
#include "memaudit/parallel.hpp"
#include "memaudit/rng.hpp"

namespace memaudit {

namespace {

constexpr double kSigmaFloor = 1e-6;

int default_timestep(const NoiseSchedule& s, int t) {
  if (t > 0) return t;
  return std::max(1, s.T / 10);
}

// Shadow losses for all (model, example) pairs; the eps draws are derived
// from the example index only, so every model sees identical noise on a
// given example.
std::vector<std::vector<double>> shadow_losses(const ShadowEnsemble& ensemble,
                                               const Dataset& data,
                                               const NoiseSchedule& s, int t,
                                               const LiRAConfig& cfg) {
  const std::size_t m = ensemble.models.size();
  const std::size_t n = data.size();
  std::vector<std::vector<double>> losses(m, std::vector<double>(n));
  parallel_for(
      m * n,
      [&](std::size_t k) {
        const std::size_t mi = k / n;
        const std::size_t ei = k % n;
        losses[mi][ei] = averaged_loss(
            ensemble.models[mi], s, data.images[ei], t, cfg.n_noise,
            cfg.use_flip, derive_seed(cfg.noise_seed, "lira-eps", ei));
      },
      global_thread_count());
  return losses;
}

// Deterministic coverage repair: give every all-IN example an OUT slot (and
// vice versa) by swapping with a partner example that has slack in the same
// row, preserving the exact per-row IN count.
void repair_coverage(std::vector<std::vector<std::uint8_t>>& masks, int count,
                     std::size_t n) {
  std::vector<int> deg(n, 0);
  for (const auto& row : masks)
    for (std::size_t e = 0; e < n; ++e) deg[e] += row[e];
  for (std::size_t e = 0; e < n; ++e) {
    if (deg[e] == count) {
      // Needs an OUT: drop one IN, promote a partner that keeps an OUT.
      bool done = false;
      for (int r = 0; r < count && !done; ++r) {
        for (std::size_t e2 = 0; e2 < n && !done; ++e2) {
          if (masks[r][e2] || count - deg[e2] < 2) continue;
          masks[r][e] = 0;
          masks[r][e2] = 1;
          --deg[e];
          ++deg[e2];
          done = true;
        }
      }
    } else if (deg[e] == 0) {
      // Needs an IN: claim one from a partner that keeps an IN.
      bool done = false;
      for (int r = 0; r < count && !done; ++r) {
        for (std::size_t e2 = 0; e2 < n && !done; ++e2) {
          if (!masks[r][e2] || deg[e2] < 2) continue;
          masks[r][e] = 1;
          masks[r][e2] = 0;
          ++deg[e];
          --deg[e2];
          done = true;
        }
      }
    }
  }
}

}  // namespace

bool ShadowEnsemble::covers_all_examples() const {
  if (masks.empty()) return false;
  const std::size_t n = masks[0].size();
  for (std::size_t e = 0; e < n; ++e) {
    bool has_in = false, has_out = false;
    for (const auto& row : masks) {
      if (row[e]) has_in = true;
      else has_out = true;
    }
    if (!has_in || !has_out) return false;
  }
  return true;
}

ShadowEnsemble train_shadow_models(const Dataset& data, int count, double split,
                                   const TrainingConfig& cfg,
                                   const NoiseSchedule& s,
                                   const ArchConfig& arch) {
  if (count < 2)
    throw_error(ErrorCategory::Config, "shadow ensemble: count must be >= 2");
  if (!(split > 0.0 && split < 1.0))
    throw_error(ErrorCategory::Config, "shadow ensemble: split must be in (0,1)");
  const std::size_t n = data.size();
  const std::size_t in_count = static_cast<std::size_t>(split * n);
  if (in_count == 0 || in_count == n)
    throw_error(ErrorCategory::Config, "shadow ensemble: split selects 0 or all");

  ShadowEnsemble ens;
  ens.split = split;
  if (data.manifest.contains("dataset_id"))
    ens.base_dataset_id = data.manifest["dataset_id"].get<std::string>();

  // Draw masks, resampling until coverage holds (guaranteed achievable for
  // count >= 4 with a fractional split).
  for (std::uint64_t attempt = 0;; ++attempt) {
    ens.masks.assign(count, std::vector<std::uint8_t>(n, 0));
    for (int mi = 0; mi < count; ++mi) {
      Rng rng(derive_seed(cfg.seed, "shadow-mask",
                          attempt * static_cast<std::uint64_t>(count) + mi));
      std::vector<std::size_t> perm(n);
      for (std::size_t i = 0; i < n; ++i) perm[i] = i;
      for (std::size_t i = n; i > 1; --i)
        std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
      for (std::size_t i = 0; i < in_count; ++i) ens.masks[mi][perm[i]] = 1;
    }
    if (count >= 4) repair_coverage(ens.masks, count, n);
    if (count < 4 || ens.covers_all_examples()) break;
    if (attempt > 1000)
      throw_error(ErrorCategory::Config,
                  "shadow ensemble: could not satisfy IN/OUT coverage");
  }

  for (int mi = 0; mi < count; ++mi) {
    Dataset subset;
    subset.labels = data.labels ? std::make_optional(std::vector<int>{})
                                : std::nullopt;
    for (std::size_t e = 0; e < n; ++e) {
      if (!ens.masks[mi][e]) continue;
      subset.images.push_back(data.images[e]);
      if (subset.labels) subset.labels->push_back((*data.labels)[e]);
      subset.ids.push_back(static_cast<int>(subset.ids.size()));
    }
    TrainingConfig member_cfg = cfg;
    member_cfg.seed = derive_seed(cfg.seed, "shadow-train", mi);
    try {
      ens.models.push_back(train(subset, member_cfg, s, arch));
    } catch (const Error& e) {
      throw_error(ErrorCategory::Training,
                  "shadow model " + std::to_string(mi) + " failed: " + e.what());
    }
  }
  return ens;
}

double averaged_loss(const DenoiserModel& m, const NoiseSchedule& s,
                     const Image& x, int t, int n_noise, bool use_flip,
                     std::uint64_t noise_seed) {
  if (n_noise < 1)
    throw_error(ErrorCategory::Argument, "averaged_loss: n_noise must be >= 1");
  Rng rng(noise_seed);
  std::vector<double> eps(x.dim());
  const Image flipped = use_flip ? flip_horizontal(x) : Image();
  double acc = 0.0;
  for (int k = 0; k < n_noise; ++k) {
    rng.fill_gaussian(eps);
    acc += diffusion_loss(m, s, x, t, eps);
    if (use_flip) acc += diffusion_loss(m, s, flipped, t, eps);
  }
  return acc / static_cast<double>(use_flip ? 2 * n_noise : n_noise);
}

std::vector<bool> loss_threshold_attack(const std::vector<double>& losses,
                                        double tau) {
  std::vector<bool> verdicts(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) verdicts[i] = losses[i] < tau;
  return verdicts;
}

double choose_tau(const std::vector<double>& losses,
                  const std::vector<bool>& labels) {
  if (losses.size() != labels.size() || losses.empty())
    throw_error(ErrorCategory::Argument, "choose_tau: bad calibration set");
  std::vector<double> candidates = losses;
  std::sort(candidates.begin(), candidates.end());
  candidates.push_back(candidates.back() + 1.0);
  double best_tau = candidates[0];
  int best_correct = -1;
  for (double tau : candidates) {
    int correct = 0;
    for (std::size_t i = 0; i < losses.size(); ++i)
      if ((losses[i] < tau) == labels[i]) ++correct;
    if (correct > best_correct) {
      best_correct = correct;
      best_tau = tau;
    }
  }
  return best_tau;
}

LiRAStats fit_lira_stats(std::vector<double> in_losses,
                         std::vector<double> out_losses) {
  if (in_losses.empty() || out_losses.empty())
    throw_error(ErrorCategory::Degenerate,
                "lira stats: both IN and OUT sides must be non-empty");
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto var = [&](const std::vector<double>& v, double mu) {
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return v.size() > 1 ? s / static_cast<double>(v.size() - 1) : 0.0;
  };

  LiRAStats st;
  st.mu_in = mean(in_losses);
  st.mu_out = mean(out_losses);
  double var_in = var(in_losses, st.mu_in);
  double var_out = var(out_losses, st.mu_out);
  if (in_losses.size() < 2 || out_losses.size() < 2) {
    // Pooled fallback over both sides.
    std::vector<double> pooled = in_losses;
    pooled.insert(pooled.end(), out_losses.begin(), out_losses.end());
    const double mu_p = mean(pooled);
    const double var_p = var(pooled, mu_p);
    if (in_losses.size() < 2) var_in = var_p;
    if (out_losses.size() < 2) var_out = var_p;
  }
  st.sigma_in = std::max(std::sqrt(var_in), kSigmaFloor);
  st.sigma_out = std::max(std::sqrt(var_out), kSigmaFloor);
  st.in_losses = std::move(in_losses);
  st.out_losses = std::move(out_losses);
  return st;
}

double lira_score(double l_star, const LiRAStats& stats) {
  if (!(stats.sigma_in > 0.0) || !(stats.sigma_out > 0.0))
    throw_error(ErrorCategory::Degenerate, "lira_score: degenerate sigma");
  auto log_normal_pdf = [](double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * M_PI);
  };
  return log_normal_pdf(l_star, stats.mu_in, stats.sigma_in) -
         log_normal_pdf(l_star, stats.mu_out, stats.sigma_out);
}

AttackScoreSet run_lira(const ShadowEnsemble& ensemble,
                        const DenoiserModel& target, const Dataset& data,
                        const NoiseSchedule& s,
                        const std::vector<std::uint8_t>& target_membership,
                        const LiRAConfig& cfg) {
  const std::size_t n = data.size();
  if (target_membership.size() != n)
    throw_error(ErrorCategory::Config, "run_lira: membership label size mismatch");
  if (ensemble.masks.empty() || ensemble.masks[0].size() != n)
    throw_error(ErrorCategory::Config, "run_lira: ensemble mask size mismatch");
  if (!ensemble.covers_all_examples())
    throw_error(ErrorCategory::Config,
                "run_lira: ensemble does not cover every example IN and OUT");

  const int t = default_timestep(s, cfg.t);
  const auto losses = shadow_losses(ensemble, data, s, t, cfg);

  std::vector<double> target_losses(n);
  parallel_for(
      n,
      [&](std::size_t e) {
        target_losses[e] =
            averaged_loss(target, s, data.images[e], t, cfg.n_noise,
                          cfg.use_flip, derive_seed(cfg.noise_seed, "lira-eps", e));
      },
      global_thread_count());

  // Optional pooled (global) variance across all examples.
  double global_sigma_in = 0.0, global_sigma_out = 0.0;
  if (!cfg.per_example_variance) {
    std::vector<double> all_in, all_out;
    for (std::size_t e = 0; e < n; ++e)
      for (std::size_t mi = 0; mi < ensemble.models.size(); ++mi)
        (ensemble.masks[mi][e] ? all_in : all_out).push_back(losses[mi][e]);
    const LiRAStats pooled = fit_lira_stats(std::move(all_in), std::move(all_out));
    global_sigma_in = pooled.sigma_in;
    global_sigma_out = pooled.sigma_out;
  }

  AttackScoreSet out;
  out.attack_id = "lira";
  out.t = t;
  out.n_noise = cfg.n_noise;
  out.use_flip = cfg.use_flip;
  out.entries.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<double> in_l, out_l;
    for (std::size_t mi = 0; mi < ensemble.models.size(); ++mi)
      (ensemble.masks[mi][e] ? in_l : out_l).push_back(losses[mi][e]);
    LiRAStats st = fit_lira_stats(std::move(in_l), std::move(out_l));
    if (!cfg.per_example_variance) {
      st.sigma_in = global_sigma_in;
      st.sigma_out = global_sigma_out;
    }
    out.entries[e] = {static_cast<int>(e), lira_score(target_losses[e], st),
                      target_membership[e] != 0};
  }
  return out;
}

std::vector<RocPoint> roc_curve(const AttackScoreSet& scores) {
  std::size_t pos = 0, neg = 0;
  for (const AttackScore& e : scores.entries) (e.is_member ? pos : neg)++;
  if (pos == 0 || neg == 0)
    throw_error(ErrorCategory::Degenerate, "roc_curve: need both classes");

  std::vector<AttackScore> sorted = scores.entries;
  std::sort(sorted.begin(), sorted.end(),
            [](const AttackScore& a, const AttackScore& b) {
              return a.score > b.score;
            });

  std::vector<RocPoint> curve;
  curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    // Consume all entries tied at this score before emitting a point.
    const double score = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == score) {
      if (sorted[i].is_member) ++tp;
      else ++fp;
      ++i;
    }
    curve.push_back({static_cast<double>(fp) / neg,
                     static_cast<double>(tp) / pos, score});
  }
  return curve;
}

double tpr_at_fpr(const std::vector<RocPoint>& curve, double fpr) {
  double best = 0.0;
  for (const RocPoint& p : curve)
    if (p.fpr <= fpr) best = std::max(best, p.tpr);
  return best;
}

double roc_auc(const std::vector<RocPoint>& curve) {
  double auc = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    auc += (curve[i].fpr - curve[i - 1].fpr) *
           0.5 * (curve[i].tpr + curve[i - 1].tpr);
  // Close the curve to (1,1) if the sweep ended early.
  if (!curve.empty() && curve.back().fpr < 1.0)
    auc += (1.0 - curve.back().fpr) * 0.5 * (1.0 + curve.back().tpr);
  return auc;
}

std::vector<std::pair<int, double>> timestep_sweep(
    const ShadowEnsemble& ensemble, const DenoiserModel& target,
    const Dataset& data, const NoiseSchedule& s,
    const std::vector<std::uint8_t>& target_membership,
    const std::vector<int>& t_list, double fpr, const LiRAConfig& base_cfg) {
  std::vector<std::pair<int, double>> out;
  for (int t : t_list) {
    if (t < 1 || t > s.T)
      throw_error(ErrorCategory::Argument, "timestep_sweep: t outside [1, T]");
    LiRAConfig cfg = base_cfg;
    cfg.t = t;
    const AttackScoreSet scores =
        run_lira(ensemble, target, data, s, target_membership, cfg);
    out.emplace_back(t, tpr_at_fpr(roc_curve(scores), fpr));
  }
  return out;
}

TrainingProgressResult training_progress_attack(
    const std::vector<std::pair<long, DenoiserModel>>& checkpoints,
    const ShadowEnsemble& ensemble, const Dataset& data, const NoiseSchedule& s,
    const std::vector<std::uint8_t>& target_membership, double fpr,
    const LiRAConfig& cfg) {
  for (std::size_t i = 1; i < checkpoints.size(); ++i)
    if (checkpoints[i].first <= checkpoints[i - 1].first)
      throw_error(ErrorCategory::Argument,
                  "training_progress_attack: checkpoints must be ordered by step");

  TrainingProgressResult out;
  std::vector<long> first_success(data.size(), -1);
  for (const auto& [step, model] : checkpoints) {
    const AttackScoreSet scores =
        run_lira(ensemble, model, data, s, target_membership, cfg);
    const auto curve = roc_curve(scores);
    out.series.push_back({step, tpr_at_fpr(curve, fpr)});

    // Flag members above the score threshold realizing the evaluation FPR.
    double threshold = std::numeric_limits<double>::infinity();
    for (const RocPoint& p : curve)
      if (p.fpr <= fpr) threshold = p.threshold;
    for (const AttackScore& e : scores.entries) {
      if (e.is_member && e.score >= threshold && first_success[e.example_id] < 0)
        first_success[e.example_id] = step;
    }
  }
  for (std::size_t e = 0; e < data.size(); ++e)
    if (target_membership[e])
      out.first_success_step.emplace_back(static_cast<int>(e), first_success[e]);
  return out;
}

}  // namespace memaudit
