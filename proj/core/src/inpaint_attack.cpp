#include "memaudit/inpaint_attack.hpp"

#include <algorithm>
#include <cmath>

#include "memaudit/error.hpp"
#include "memaudit/metrics.hpp"
#include "memaudit/parallel.hpp"
#include "memaudit/rng.hpp"

namespace memaudit {

std::vector<std::uint8_t> MaskSpec::build(int h, int w, int c) const {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(h) * w * c, 1);
  auto mask_out = [&](int y, int x) {
    for (int ch = 0; ch < c; ++ch)
      mask[(static_cast<std::size_t>(y) * w + x) * c + ch] = 0;
  };
  switch (kind) {
    case Kind::LeftHalf:
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w / 2; ++x) mask_out(y, x);
      break;
    case Kind::CentralFraction: {
      if (!(fraction > 0.0 && fraction < 1.0))
        throw_error(ErrorCategory::Config, "mask: fraction must be in (0,1)");
      const double side = std::sqrt(fraction);
      const int mh = std::max(1, static_cast<int>(std::lround(side * h)));
      const int mw = std::max(1, static_cast<int>(std::lround(side * w)));
      const int y0 = (h - mh) / 2, x0 = (w - mw) / 2;
      for (int y = y0; y < y0 + mh; ++y)
        for (int x = x0; x < x0 + mw; ++x) mask_out(y, x);
      break;
    }
    case Kind::Random: {
      if (!(fraction > 0.0 && fraction < 1.0))
        throw_error(ErrorCategory::Config, "mask: fraction must be in (0,1)");
      Rng rng(derive_seed(seed, "mask", 0));
      const int total = h * w;
      const int k = std::max(1, static_cast<int>(std::lround(fraction * total)));
      std::vector<int> perm(total);
      for (int i = 0; i < total; ++i) perm[i] = i;
      for (int i = total; i > 1; --i)
        std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
      for (int i = 0; i < k; ++i) mask_out(perm[i] / w, perm[i] % w);
      break;
    }
  }
  return mask;
}

namespace {

// l2 restricted to a pixel subset (selected = nonzero entries).
double masked_l2(const Image& a, const Image& b,
                 const std::vector<std::uint8_t>& selected) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    if (!selected[i]) continue;
    const double diff = a.pixels[i] - b.pixels[i];
    acc += diff * diff;
    ++count;
  }
  return count == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(count));
}

}  // namespace

ReconstructionSet generate_reconstructions(const DenoiserModel& main_model,
                                           const NoiseSchedule& s,
                                           const Image& target, int target_id,
                                           const MaskSpec& mask, int n,
                                           std::uint64_t seed,
                                           const InpaintConfig& sampler_cfg) {
  if (n < 1)
    throw_error(ErrorCategory::Argument, "generate_reconstructions: n must be >= 1");
  ReconstructionSet set;
  set.target_id = target_id;
  set.target = target;
  set.mask = mask.build(target.h, target.w, target.c);
  set.items.resize(n);
  parallel_for(
      n,
      [&](std::size_t k) {
        set.items[k].image =
            inpaint(main_model, s, target, set.mask,
                    derive_seed(seed, "reconstruction", k), sampler_cfg);
      },
      global_thread_count());
  return set;
}

void score_contrastive(ReconstructionSet& set, const DenoiserModel& main_model,
                       const DenoiserModel& support_model,
                       const NoiseSchedule& s, int t, int n_noise,
                       std::uint64_t noise_seed) {
  if (t <= 0) t = std::max(1, s.T / 10);
  std::vector<std::uint8_t> unknown(set.mask.size());
  for (std::size_t i = 0; i < set.mask.size(); ++i) unknown[i] = !set.mask[i];
  std::vector<std::uint8_t> all(set.mask.size(), 1);

  parallel_for(
      set.items.size(),
      [&](std::size_t k) {
        ReconstructionItem& item = set.items[k];
        const std::uint64_t eps_seed = derive_seed(noise_seed, "contrastive", k);
        item.main_loss =
            averaged_loss(main_model, s, item.image, t, n_noise, false, eps_seed);
        item.support_loss =
            averaged_loss(support_model, s, item.image, t, n_noise, false, eps_seed);
        if (item.support_loss == 0.0)
          throw_error(ErrorCategory::Degenerate,
                      "score_contrastive: zero support loss");
        item.contrastive = item.main_loss / item.support_loss;
        item.l2_masked = masked_l2(item.image, set.target, unknown);
        item.l2_full = masked_l2(item.image, set.target, all);
      },
      global_thread_count());

  std::stable_sort(set.items.begin(), set.items.end(),
                   [](const ReconstructionItem& a, const ReconstructionItem& b) {
                     return a.contrastive < b.contrastive;
                   });
  set.scored = true;
}

void verify_support_out(const ShadowEnsemble& ensemble, int model_index,
                        int example_index) {
  if (model_index < 0 ||
      static_cast<std::size_t>(model_index) >= ensemble.masks.size())
    throw_error(ErrorCategory::Config, "support model index out of range");
  if (example_index < 0 ||
      static_cast<std::size_t>(example_index) >=
          ensemble.masks[model_index].size())
    throw_error(ErrorCategory::Config, "support example index out of range");
  if (ensemble.masks[model_index][example_index])
    throw_error(ErrorCategory::Config,
                "support model was trained on the target example");
}

std::vector<TargetOutcome> evaluate_attack(
    const std::vector<std::pair<int, Image>>& targets,
    const std::vector<TargetModels>& models, const NoiseSchedule& s,
    const InpaintAttackConfig& cfg) {
  if (targets.size() != models.size())
    throw_error(ErrorCategory::Config, "evaluate_attack: targets/models mismatch");
  if (cfg.top_k < 1 || cfg.top_k > cfg.n)
    throw_error(ErrorCategory::Config, "evaluate_attack: need 1 <= top_k <= n");

  std::vector<TargetOutcome> out;
  out.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& [target_id, target] = targets[i];
    const TargetModels& tm = models[i];
    if (!tm.in_model || !tm.out_model || !tm.support)
      throw_error(ErrorCategory::Config,
                  "evaluate_attack: every target needs IN, OUT and support models");

    auto run_side = [&](const DenoiserModel& main_model,
                        std::uint64_t side_tag) {
      ReconstructionSet set = generate_reconstructions(
          main_model, s, target, target_id, cfg.mask, cfg.n,
          derive_seed(cfg.seed, "target", i * 2 + side_tag), cfg.sampler);
      score_contrastive(set, main_model, *tm.support, s, cfg.t, cfg.n_noise,
                        derive_seed(cfg.seed, "score", i * 2 + side_tag));
      double masked = 0.0, full = 0.0;
      for (int k = 0; k < cfg.top_k; ++k) {
        masked += set.items[k].l2_masked;
        full += set.items[k].l2_full;
      }
      return std::make_pair(masked / cfg.top_k, full / cfg.top_k);
    };

    const auto [in_masked, in_full] = run_side(*tm.in_model, 0);
    const auto [out_masked, out_full] = run_side(*tm.out_model, 1);
    out.push_back({target_id, in_masked, out_masked, in_full, out_full});
  }
  return out;
}

}  // namespace memaudit
