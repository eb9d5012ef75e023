#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "memaudit/dataset.hpp"
#include "memaudit/extraction.hpp"
#include "memaudit/model.hpp"
#include "memaudit/schedule.hpp"
#include "memaudit/train.hpp"

namespace memaudit {

struct DedupRemoval {
  int id;
  int representative_id;  // earlier kept image it matched
  double similarity;
};

struct DedupResult {
  std::vector<int> kept_ids;
  std::vector<DedupRemoval> removed;
  double threshold = 0.0;
};

// Greedy single-linkage sweep in ascending id order: an image is removed when
// its embedding cosine similarity to any earlier kept image reaches the
// threshold. Images with degenerate (constant) embeddings fall back to exact
// pixel comparison.
DedupResult deduplicate(const Dataset& data, double threshold);

// Derived dataset containing only the kept images, re-numbered densely; the
// manifest records the source ids.
Dataset apply_dedup(const Dataset& data, const DedupResult& result);

struct DedupExperimentConfig {
  double threshold = 0.85;
  TrainingConfig train;
  ArchConfig arch;
  int n_generations = 1024;
  int generations_per_batch = 64;
  int sample_stride = 1;
  std::uint64_t sample_seed = 0;
  ExtractionScanConfig scan;
};

struct DedupExperimentResult {
  int count_before = 0;  // unique extractions from the model on the raw data
  int count_after = 0;   // same pipeline on the deduplicated data
  DedupResult dedup;
};

// Trains one model per dataset variant (identical config and seeds) and runs
// the untargeted extraction scan on each.
DedupExperimentResult dedup_defense_experiment(const Dataset& data,
                                               const NoiseSchedule& s,
                                               const DedupExperimentConfig& cfg);

struct CanaryPool {
  int pool_size = 0;
  std::vector<Image> canaries;
  // (canary id, duplicate count) for the inserted subset.
  std::vector<std::pair<int, int>> inserted;
  std::vector<double> losses;  // empty until measured

  bool is_inserted(int canary_id) const;
};

// P i.i.d. uniform-noise images, deterministic from the seed. P must be a
// power of two so the exposure ceiling log2(P) is integral.
CanaryPool generate_canaries(int P, int h, int w, int c, std::uint64_t seed);

// Fills pool.losses with the Monte-Carlo denoising loss of every canary under
// the model. t = 0 selects the default attack timestep.
void measure_pool_losses(CanaryPool& pool, const DenoiserModel& m,
                         const NoiseSchedule& s, int t = 0, int n_noise = 20,
                         std::uint64_t noise_seed = 0);

// log2(P) - log2(rank) where rank is the canary's ascending-loss position in
// the pool (average rank over ties). Requires measured losses.
double exposure(const CanaryPool& pool, int canary_id);

struct CanaryAuditRow {
  int duplicate_count;
  double max_exposure;
};

struct CanaryAuditResult {
  CanaryPool pool;                 // losses populated
  std::vector<double> exposures;   // per canary id
  std::vector<CanaryAuditRow> table;
};

// Trains one model on data plus the duplicated canaries, then ranks the whole
// pool by loss. The table reports the max exposure per duplicate count; the
// count-0 row covers the non-inserted pool remainder.
CanaryAuditResult canary_audit(const Dataset& data, const CanaryPool& pool,
                               const std::vector<std::pair<int, int>>& duplicate_counts,
                               const TrainingConfig& cfg, const NoiseSchedule& s,
                               const ArchConfig& arch, int loss_t = 0,
                               int loss_n_noise = 20,
                               std::uint64_t loss_noise_seed = 0);

}  // namespace memaudit
