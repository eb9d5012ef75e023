#include "memaudit/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "memaudit/error.hpp"
#include "memaudit/membership.hpp"
#include "memaudit/metrics.hpp"
#include "memaudit/parallel.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/sampler.hpp"

namespace memaudit {

namespace {

bool pixels_equal(const Image& a, const Image& b) {
  return a.pixels == b.pixels;
}

}  // namespace

DedupResult deduplicate(const Dataset& data, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw_error(ErrorCategory::Argument, "deduplicate: threshold must be in (0,1]");
  data.validate();
  const std::size_t n = data.size();

  std::vector<Embedding> emb(n);
  parallel_for(
      n, [&](std::size_t i) { emb[i] = embed(data.images[i]); },
      global_thread_count());

  // similar_earlier[j] = ascending list of earlier indices within threshold.
  std::vector<std::vector<std::pair<int, double>>> similar_earlier(n);
  parallel_for(
      n,
      [&](std::size_t j) {
        for (std::size_t i = 0; i < j; ++i) {
          double sim;
          if (emb[i].constant || emb[j].constant)
            sim = pixels_equal(data.images[i], data.images[j]) ? 1.0 : 0.0;
          else
            sim = cosine_similarity(emb[i], emb[j]);
          if (sim >= threshold)
            similar_earlier[j].push_back({static_cast<int>(i), sim});
        }
      },
      global_thread_count());

  DedupResult result;
  result.threshold = threshold;
  std::vector<std::uint8_t> kept(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    const std::pair<int, double>* hit = nullptr;
    for (const auto& cand : similar_earlier[j]) {
      if (kept[cand.first]) {
        hit = &cand;
        break;
      }
    }
    if (hit) {
      result.removed.push_back(
          {data.ids[j], data.ids[hit->first], hit->second});
    } else {
      kept[j] = 1;
      result.kept_ids.push_back(data.ids[j]);
    }
  }
  return result;
}

Dataset apply_dedup(const Dataset& data, const DedupResult& result) {
  std::vector<std::uint8_t> keep(data.size(), 0);
  for (int id : result.kept_ids) {
    auto it = std::find(data.ids.begin(), data.ids.end(), id);
    if (it == data.ids.end())
      throw_error(ErrorCategory::Argument, "apply_dedup: kept id not in dataset");
    keep[static_cast<std::size_t>(it - data.ids.begin())] = 1;
  }
  Dataset out;
  if (data.labels) out.labels.emplace();
  nlohmann::json source_ids = nlohmann::json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!keep[i]) continue;
    out.images.push_back(data.images[i]);
    if (data.labels) out.labels->push_back((*data.labels)[i]);
    out.ids.push_back(static_cast<int>(out.ids.size()));
    source_ids.push_back(data.ids[i]);
  }
  out.manifest["derived_from"] = data.manifest.value("source", "dataset");
  out.manifest["dedup_threshold"] = result.threshold;
  out.manifest["source_ids"] = std::move(source_ids);
  return out;
}

namespace {

int run_extraction_pipeline(const Dataset& data, const NoiseSchedule& s,
                            const DedupExperimentConfig& cfg) {
  DenoiserModel model = train(data, cfg.train, s, cfg.arch);
  std::vector<GenerationBatch> batches;
  int produced = 0;
  int batch_index = 0;
  while (produced < cfg.n_generations) {
    const int count =
        std::min(cfg.generations_per_batch, cfg.n_generations - produced);
    GenerationRequest req;
    req.seed = derive_seed(cfg.sample_seed, "dedup-gen", batch_index);
    req.count = count;
    GenerationBatch batch;
    batch.images = sample(model, s, req, cfg.sample_stride);
    batch.seeds.resize(count);
    for (int k = 0; k < count; ++k)
      batch.seeds[k] = derive_seed(req.seed, "sample", k);
    batch.model_id = "dedup-experiment";
    batches.push_back(std::move(batch));
    produced += count;
    ++batch_index;
  }
  const ExtractionScanResult scan =
      untargeted_extraction_scan(batches, data, cfg.scan);
  int extracted = 0;
  for (const auto& rec : scan.records)
    if (rec.extracted) ++extracted;
  return extracted;
}

}  // namespace

DedupExperimentResult dedup_defense_experiment(const Dataset& data,
                                               const NoiseSchedule& s,
                                               const DedupExperimentConfig& cfg) {
  DedupExperimentResult result;
  result.dedup = deduplicate(data, cfg.threshold);
  const Dataset cleaned = apply_dedup(data, result.dedup);
  result.count_before = run_extraction_pipeline(data, s, cfg);
  result.count_after = run_extraction_pipeline(cleaned, s, cfg);
  return result;
}

bool CanaryPool::is_inserted(int canary_id) const {
  for (const auto& [id, count] : inserted)
    if (id == canary_id) return true;
  return false;
}

CanaryPool generate_canaries(int P, int h, int w, int c, std::uint64_t seed) {
  if (P < 2 || (P & (P - 1)) != 0)
    throw_error(ErrorCategory::Argument,
                "generate_canaries: pool size must be a power of two >= 2");
  if (h < 1 || w < 1 || c < 1)
    throw_error(ErrorCategory::Argument, "generate_canaries: bad shape");
  CanaryPool pool;
  pool.pool_size = P;
  pool.canaries.resize(P);
  for (int i = 0; i < P; ++i) {
    Rng rng(derive_seed(seed, "canary", i));
    Image& img = pool.canaries[i];
    img.h = h;
    img.w = w;
    img.c = c;
    img.pixels.resize(static_cast<std::size_t>(h) * w * c);
    for (double& p : img.pixels) p = rng.uniform();
  }
  return pool;
}

void measure_pool_losses(CanaryPool& pool, const DenoiserModel& m,
                         const NoiseSchedule& s, int t, int n_noise,
                         std::uint64_t noise_seed) {
  if (t <= 0) t = std::max(1, s.T / 10);
  pool.losses.assign(pool.canaries.size(), 0.0);
  parallel_for(
      pool.canaries.size(),
      [&](std::size_t i) {
        pool.losses[i] =
            averaged_loss(m, s, pool.canaries[i], t, n_noise, false,
                          derive_seed(noise_seed, "canary-loss", i));
      },
      global_thread_count());
}

double exposure(const CanaryPool& pool, int canary_id) {
  if (pool.losses.size() != pool.canaries.size() || pool.losses.empty())
    throw_error(ErrorCategory::State, "exposure: pool losses not measured");
  if (canary_id < 0 || canary_id >= pool.pool_size)
    throw_error(ErrorCategory::Argument, "exposure: canary id out of range");
  const double target = pool.losses[canary_id];
  // Average rank over ties: 1-based midpoint of the tied block.
  std::size_t below = 0, tied = 0;
  for (double l : pool.losses) {
    if (l < target) ++below;
    else if (l == target) ++tied;
  }
  const double rank = static_cast<double>(below) + (static_cast<double>(tied) + 1.0) / 2.0;
  return std::log2(static_cast<double>(pool.pool_size)) - std::log2(rank);
}

CanaryAuditResult canary_audit(const Dataset& data, const CanaryPool& pool,
                               const std::vector<std::pair<int, int>>& duplicate_counts,
                               const TrainingConfig& cfg, const NoiseSchedule& s,
                               const ArchConfig& arch, int loss_t,
                               int loss_n_noise, std::uint64_t loss_noise_seed) {
  data.validate();
  CanaryAuditResult result;
  result.pool = pool;
  result.pool.inserted = duplicate_counts;

  Dataset augmented = data;
  for (const auto& [id, count] : duplicate_counts) {
    if (id < 0 || id >= pool.pool_size)
      throw_error(ErrorCategory::Argument, "canary_audit: canary id out of range");
    if (count < 1)
      throw_error(ErrorCategory::Argument,
                  "canary_audit: duplicate counts must be >= 1");
    if (!pool.canaries[id].pixels.empty() &&
        (pool.canaries[id].h != data.images.front().h ||
         pool.canaries[id].w != data.images.front().w ||
         pool.canaries[id].c != data.images.front().c))
      throw_error(ErrorCategory::Argument,
                  "canary_audit: canary shape does not match the dataset");
    for (int r = 0; r < count; ++r) {
      augmented.images.push_back(pool.canaries[id]);
      if (augmented.labels) augmented.labels->push_back(0);
      augmented.ids.push_back(static_cast<int>(augmented.ids.size()));
    }
  }

  DenoiserModel model = train(augmented, cfg, s, arch);
  measure_pool_losses(result.pool, model, s, loss_t, loss_n_noise,
                      loss_noise_seed);

  result.exposures.resize(pool.pool_size);
  for (int i = 0; i < pool.pool_size; ++i)
    result.exposures[i] = exposure(result.pool, i);

  std::map<int, double> max_by_count;
  for (const auto& [id, count] : duplicate_counts) {
    auto [it, fresh] = max_by_count.try_emplace(count, result.exposures[id]);
    if (!fresh) it->second = std::max(it->second, result.exposures[id]);
  }
  // Count-0 row: the non-inserted remainder of the pool.
  double max_uninserted = 0.0;
  bool any_uninserted = false;
  for (int i = 0; i < pool.pool_size; ++i) {
    if (result.pool.is_inserted(i)) continue;
    max_uninserted = any_uninserted ? std::max(max_uninserted, result.exposures[i])
                                    : result.exposures[i];
    any_uninserted = true;
  }
  if (any_uninserted) result.table.push_back({0, max_uninserted});
  for (const auto& [count, value] : max_by_count)
    result.table.push_back({count, value});
  return result;
}

}  // namespace memaudit
