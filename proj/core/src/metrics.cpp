#include "memaudit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "memaudit/error.hpp"

namespace memaudit {

double l2_normalized(const Image& a, const Image& b) {
  if (!a.same_shape(b))
    throw_error(ErrorCategory::Argument, "l2_normalized: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double diff = a.pixels[i] - b.pixels[i];
    acc += diff * diff;
  }
  return std::sqrt(acc / static_cast<double>(a.pixels.size()));
}

double tiled_l2(const Image& a, const Image& b, int grid_rows, int grid_cols) {
  if (!a.same_shape(b))
    throw_error(ErrorCategory::Argument, "tiled_l2: shape mismatch");
  if (grid_rows < 1 || grid_cols < 1 || a.h % grid_rows != 0 || a.w % grid_cols != 0)
    throw_error(ErrorCategory::Argument, "tiled_l2: grid does not divide image");
  const int th = a.h / grid_rows;
  const int tw = a.w / grid_cols;
  const double tile_dim = static_cast<double>(th) * tw * a.c;
  double worst = 0.0;
  for (int gr = 0; gr < grid_rows; ++gr) {
    for (int gc = 0; gc < grid_cols; ++gc) {
      double acc = 0.0;
      for (int y = gr * th; y < (gr + 1) * th; ++y)
        for (int x = gc * tw; x < (gc + 1) * tw; ++x)
          for (int ch = 0; ch < a.c; ++ch) {
            const double diff = a.at(y, x, ch) - b.at(y, x, ch);
            acc += diff * diff;
          }
      worst = std::max(worst, std::sqrt(acc / tile_dim));
    }
  }
  return worst;
}

double relative_distance(const Image& xhat, const Image& x,
                         const NeighborSet& neighbors, double alpha) {
  if (!(alpha > 0.0))
    throw_error(ErrorCategory::Argument, "relative_distance: alpha must be > 0");
  if (neighbors.neighbors.empty())
    throw_error(ErrorCategory::Degenerate, "relative_distance: empty neighbor set");
  double mean = 0.0;
  for (const Neighbor& nb : neighbors.neighbors) mean += nb.distance;
  mean /= static_cast<double>(neighbors.neighbors.size());
  if (mean == 0.0)
    throw_error(ErrorCategory::Degenerate,
                "relative_distance: neighborhood mean distance is 0");
  return l2_normalized(xhat, x) / (alpha * mean);
}

Embedding embed(const Image& x, int grid) {
  if (grid < 1) throw_error(ErrorCategory::Argument, "embed: grid must be >= 1");
  const int g = grid;
  std::vector<double> cell(static_cast<std::size_t>(g) * g, 0.0);

  // Luminance plane.
  std::vector<double> lum(static_cast<std::size_t>(x.h) * x.w);
  for (int y = 0; y < x.h; ++y)
    for (int xx = 0; xx < x.w; ++xx) {
      double v;
      if (x.c == 3)
        v = 0.299 * x.at(y, xx, 0) + 0.587 * x.at(y, xx, 1) + 0.114 * x.at(y, xx, 2);
      else {
        v = 0.0;
        for (int ch = 0; ch < x.c; ++ch) v += x.at(y, xx, ch);
        v /= x.c;
      }
      lum[static_cast<std::size_t>(y) * x.w + xx] = v;
    }

  // Exact area-weighted downsample: each output cell integrates the pixel
  // values over its footprint. Symmetric in both axes, so flipping the image
  // flips the grid.
  const double sy = static_cast<double>(x.h) / g;
  const double sx = static_cast<double>(x.w) / g;
  for (int cy = 0; cy < g; ++cy) {
    const double y0 = cy * sy, y1 = (cy + 1) * sy;
    for (int cx = 0; cx < g; ++cx) {
      const double x0 = cx * sx, x1 = (cx + 1) * sx;
      double acc = 0.0;
      for (int py = static_cast<int>(y0); py < x.h && py < y1; ++py) {
        const double wy = std::min<double>(py + 1, y1) - std::max<double>(py, y0);
        if (wy <= 0) continue;
        for (int px = static_cast<int>(x0); px < x.w && px < x1; ++px) {
          const double wx = std::min<double>(px + 1, x1) - std::max<double>(px, x0);
          if (wx <= 0) continue;
          acc += wy * wx * lum[static_cast<std::size_t>(py) * x.w + px];
        }
      }
      cell[static_cast<std::size_t>(cy) * g + cx] = acc / (sy * sx);
    }
  }

  double mean = 0.0;
  for (double v : cell) mean += v;
  mean /= static_cast<double>(cell.size());
  double norm_sq = 0.0;
  for (double& v : cell) {
    v -= mean;
    norm_sq += v * v;
  }
  Embedding e;
  if (norm_sq < 1e-24) {
    e.vec.assign(cell.size(), 0.0);
    e.constant = true;
    return e;
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& v : cell) v *= inv;
  e.vec = std::move(cell);
  return e;
}

double cosine_similarity(const Embedding& u, const Embedding& v) {
  if (u.vec.size() != v.vec.size())
    throw_error(ErrorCategory::Argument, "cosine_similarity: dim mismatch");
  if (u.constant || v.constant)
    throw_error(ErrorCategory::Degenerate, "cosine_similarity: zero-norm input");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.vec.size(); ++i) {
    dot += u.vec[i] * v.vec[i];
    nu += u.vec[i] * u.vec[i];
    nv += v.vec[i] * v.vec[i];
  }
  if (nu == 0.0 || nv == 0.0)
    throw_error(ErrorCategory::Degenerate, "cosine_similarity: zero-norm input");
  return std::clamp(dot / std::sqrt(nu * nv), -1.0, 1.0);
}

double embedding_distance(const Embedding& u, const Embedding& v) {
  if (u.vec.size() != v.vec.size())
    throw_error(ErrorCategory::Argument, "embedding_distance: dim mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.vec.size(); ++i) {
    const double diff = u.vec[i] - v.vec[i];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

NeighborSet nearest_neighbors_from_distances(int query_id,
                                             const std::vector<double>& distances,
                                             std::size_t k) {
  if (distances.empty())
    throw_error(ErrorCategory::Argument, "nearest_neighbors: empty corpus");
  if (k > distances.size())
    throw_error(ErrorCategory::Argument, "nearest_neighbors: k exceeds corpus size");
  std::vector<int> order(distances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                    [&](int lhs, int rhs) {
                      if (distances[lhs] != distances[rhs])
                        return distances[lhs] < distances[rhs];
                      return lhs < rhs;  // stable ascending-id tie-break
                    });
  NeighborSet out;
  out.query_id = query_id;
  out.neighbors.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    out.neighbors.push_back({order[i], distances[order[i]]});
  return out;
}

NeighborSet nearest_neighbors(const Image& query, int query_id,
                              const std::vector<Image>& corpus, std::size_t k,
                              NeighborMetric metric) {
  if (corpus.empty())
    throw_error(ErrorCategory::Argument, "nearest_neighbors: empty corpus");
  std::vector<double> distances(corpus.size());
  if (metric == NeighborMetric::L2) {
    for (std::size_t i = 0; i < corpus.size(); ++i)
      distances[i] = l2_normalized(query, corpus[i]);
  } else {
    const Embedding qe = embed(query);
    for (std::size_t i = 0; i < corpus.size(); ++i)
      distances[i] = 1.0 - cosine_similarity(qe, embed(corpus[i]));
  }
  return nearest_neighbors_from_distances(query_id, distances, k);
}

double outlier_score(const Image& x, const std::vector<Image>& corpus,
                     std::size_t k) {
  if (corpus.empty())
    throw_error(ErrorCategory::Argument, "outlier_score: empty corpus");
  if (k > corpus.size())
    throw_error(ErrorCategory::Argument, "outlier_score: k exceeds corpus size");
  const Embedding xe = embed(x);
  std::vector<double> distances(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    distances[i] = embedding_distance(xe, embed(corpus[i]));
  NeighborSet nn = nearest_neighbors_from_distances(-1, distances, k);
  double mean = 0.0;
  for (const Neighbor& nb : nn.neighbors) mean += nb.distance;
  return mean / static_cast<double>(k);
}

}  // namespace memaudit
