#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "memaudit/dataset.hpp"
#include "memaudit/image.hpp"
#include "memaudit/metrics.hpp"

namespace memaudit {

struct GenerationBatch {
  std::vector<Image> images;
  std::vector<std::uint64_t> seeds;
  std::optional<int> label;
  std::string model_id;

  void validate() const;
};

struct SimilarityEdge {
  int i;  // i < j
  int j;
  double distance;
};

struct SimilarityGraph {
  int node_count = 0;
  std::vector<SimilarityEdge> edges;
  double threshold = 0.0;
  int grid_rows = 1;
  int grid_cols = 1;
};

// Edge (i,j) iff tiled_l2(x_i, x_j, grid) <= threshold, all pairs examined.
SimilarityGraph build_similarity_graph(const GenerationBatch& batch,
                                       double threshold, int grid_rows,
                                       int grid_cols);

struct CliqueResult {
  std::vector<int> nodes;
  bool exact = true;  // false when the greedy fallback was used
};

// Maximum clique: exact branch-and-bound with pivoting up to
// kExactCliqueLimit nodes, greedy fallback above (flagged approximate).
inline constexpr int kExactCliqueLimit = 500;
CliqueResult largest_clique(const SimilarityGraph& g);

struct FlaggedClique {
  std::vector<int> clique;
  int representative;  // clique medoid under the tiled distance
  double mean_intra_distance;
  bool exact;
};

// Flags a batch as containing a memorized image when its largest clique under
// the tiled distance has at least clique_min members.
std::optional<FlaggedClique> flag_memorized(const GenerationBatch& batch,
                                            double threshold, int clique_min,
                                            int grid_rows, int grid_cols);

struct TrainingMatch {
  int training_id;
  double distance;
};

// Nearest training image under l2_normalized when within delta.
std::optional<TrainingMatch> match_to_training(const Image& xhat,
                                               const Dataset& train,
                                               double delta);

// Number of training images within delta of x (including x itself when x is
// a training element).
int eidetic_count(const Image& x, const Dataset& train, double delta);

struct ExtractionRecord {
  int generation_id;
  std::optional<int> training_id;
  double l2 = 0.0;
  double score = 0.0;  // relative distance
  int clique_size = 0;
  bool extracted = false;
  int eidetic_k = 0;
};

struct ExtractionScanConfig {
  double alpha = 0.5;
  int n_neighbors = 50;
  double score_cutoff = 0.5;
  double delta_extract = 0.15;  // match verdicts
  double delta_eidetic = 0.1;   // duplicate-group collapsing
};

struct ExtractionScanResult {
  std::vector<ExtractionRecord> records;  // ascending score
  std::vector<std::string> warnings;
};

// Untargeted scan: scores every generation against its nearest training image
// by relative distance; counts each training image (and its duplicate group)
// once, at the first generation that hits it.
ExtractionScanResult untargeted_extraction_scan(
    const std::vector<GenerationBatch>& batches, const Dataset& train,
    const ExtractionScanConfig& cfg);

struct PrecisionRecallPoint {
  int rank;  // 1-based prefix length
  double score;
  double precision;
  int extracted_count;
};

// Precision and cumulative positive count at every prefix of a score-sorted
// record list. Requires at least one positive label.
std::vector<PrecisionRecallPoint> precision_recall(
    const std::vector<std::pair<double, bool>>& scored_labels);

}  // namespace memaudit
