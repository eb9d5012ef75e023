#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "memaudit/image.hpp"

namespace memaudit {

// Dimension-normalized Euclidean distance sqrt(sum (a_i-b_i)^2 / d); lies in
// [0,1] for [0,1]-ranged inputs.
double l2_normalized(const Image& a, const Image& b);

// Partitions both images into a rows x cols grid and returns the maximum
// l2_normalized over corresponding tile pairs. Grid must divide both
// dimensions.
double tiled_l2(const Image& a, const Image& b, int grid_rows, int grid_cols);

struct Neighbor {
  int id;
  double distance;
};

// k nearest corpus elements to a query, distances non-decreasing, ties broken
// by ascending id.
struct NeighborSet {
  int query_id = -1;
  std::vector<Neighbor> neighbors;
};

// l2(xhat, x) / (alpha * mean neighbor distance). Small values mean xhat is
// abnormally close to x relative to its training-set neighborhood.
double relative_distance(const Image& xhat, const Image& x,
                         const NeighborSet& neighbors, double alpha = 0.5);

struct Embedding {
  std::vector<double> vec;
  bool constant = false;  // image was constant; vec is all zeros
};

// Deterministic stand-in embedding: luminance, area-downsampled to a
// grid x grid patch, mean-subtracted and 2-normalized.
Embedding embed(const Image& x, int grid = 8);

double cosine_similarity(const Embedding& u, const Embedding& v);

// Euclidean distance between embedding vectors.
double embedding_distance(const Embedding& u, const Embedding& v);

enum class NeighborMetric { L2, CosineDistance };

// Exact linear-scan k-NN. With CosineDistance the images are embedded and
// compared by 1 - cosine. include_self keeps exact zero-distance self matches.
NeighborSet nearest_neighbors(const Image& query, int query_id,
                              const std::vector<Image>& corpus, std::size_t k,
                              NeighborMetric metric = NeighborMetric::L2);

// k-NN over precomputed distances to the query, used by the batch kernels.
NeighborSet nearest_neighbors_from_distances(int query_id,
                                             const std::vector<double>& distances,
                                             std::size_t k);

// Mean embedding-space distance from x to its k nearest corpus neighbors;
// larger = more of an outlier.
double outlier_score(const Image& x, const std::vector<Image>& corpus,
                     std::size_t k);

}  // namespace memaudit
