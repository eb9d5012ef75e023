#include "memaudit/extraction.hpp"

#include <algorithm>
#include <unordered_set>

#include "memaudit/error.hpp"
#include "memaudit/parallel.hpp"

namespace memaudit {

void GenerationBatch::validate() const {
  if (images.size() != seeds.size())
    throw_error(ErrorCategory::State, "batch: images/seeds size mismatch");
  std::unordered_set<std::uint64_t> seen(seeds.begin(), seeds.end());
  if (seen.size() != seeds.size())
    throw_error(ErrorCategory::State, "batch: seeds must be pairwise distinct");
}

SimilarityGraph build_similarity_graph(const GenerationBatch& batch,
                                       double threshold, int grid_rows,
                                       int grid_cols) {
  if (!(threshold > 0.0))
    throw_error(ErrorCategory::Argument, "similarity graph: threshold must be > 0");
  batch.validate();
  const int n = static_cast<int>(batch.images.size());

  SimilarityGraph g;
  g.node_count = n;
  g.threshold = threshold;
  g.grid_rows = grid_rows;
  g.grid_cols = grid_cols;

  // Row-parallel all-pairs scan; row results land in per-row slots so the
  // edge list is order-independent.
  std::vector<std::vector<SimilarityEdge>> rows(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        for (int j = static_cast<int>(i) + 1; j < n; ++j) {
          const double dist =
              tiled_l2(batch.images[i], batch.images[j], grid_rows, grid_cols);
          if (dist <= threshold)
            rows[i].push_back({static_cast<int>(i), j, dist});
        }
      },
      global_thread_count());
  for (auto& row : rows)
    g.edges.insert(g.edges.end(), row.begin(), row.end());
  return g;
}

namespace {

using AdjMatrix = std::vector<std::vector<std::uint8_t>>;

AdjMatrix adjacency(const SimilarityGraph& g) {
  AdjMatrix adj(g.node_count, std::vector<std::uint8_t>(g.node_count, 0));
  for (const SimilarityEdge& e : g.edges) {
    adj[e.i][e.j] = 1;
    adj[e.j][e.i] = 1;
  }
  return adj;
}

// Bron-Kerbosch with pivoting.
void bron_kerbosch(const AdjMatrix& adj, std::vector<int>& current,
                   std::vector<int> candidates, std::vector<int> excluded,
                   std::vector<int>& best) {
  if (candidates.empty() && excluded.empty()) {
    if (current.size() > best.size()) best = current;
    return;
  }
  if (current.size() + candidates.size() <= best.size()) return;  // bound

  // Pivot: vertex of P u X with the most neighbors in P.
  int pivot = -1;
  std::size_t best_deg = 0;
  auto consider = [&](int v) {
    std::size_t deg = 0;
    for (int u : candidates)
      if (adj[v][u]) ++deg;
    if (pivot < 0 || deg > best_deg) {
      pivot = v;
      best_deg = deg;
    }
  };
  for (int v : candidates) consider(v);
  for (int v : excluded) consider(v);

  std::vector<int> branch;
  for (int v : candidates)
    if (!adj[pivot][v]) branch.push_back(v);

  for (int v : branch) {
    std::vector<int> next_candidates, next_excluded;
    for (int u : candidates)
      if (adj[v][u]) next_candidates.push_back(u);
    for (int u : excluded)
      if (adj[v][u]) next_excluded.push_back(u);
    current.push_back(v);
    bron_kerbosch(adj, current, std::move(next_candidates),
                  std::move(next_excluded), best);
    current.pop_back();
    candidates.erase(std::find(candidates.begin(), candidates.end(), v));
    excluded.push_back(v);
  }
}

CliqueResult greedy_clique(const AdjMatrix& adj, int n) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::vector<int> degree(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) degree[i] += adj[i][j];
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return degree[a] > degree[b]; });
  std::vector<int> best;
  for (int start : order) {
    std::vector<int> clique = {start};
    for (int v : order) {
      if (v == start) continue;
      bool ok = true;
      for (int u : clique)
        if (!adj[v][u]) {
          ok = false;
          break;
        }
      if (ok) clique.push_back(v);
    }
    if (clique.size() > best.size()) best = std::move(clique);
  }
  std::sort(best.begin(), best.end());
  return {best, false};
}

}  // namespace

CliqueResult largest_clique(const SimilarityGraph& g) {
  if (g.node_count == 0) return {{}, true};
  const AdjMatrix adj = adjacency(g);
  if (g.node_count > kExactCliqueLimit) return greedy_clique(adj, g.node_count);

  std::vector<int> candidates(g.node_count);
  for (int i = 0; i < g.node_count; ++i) candidates[i] = i;
  std::vector<int> current, excluded, best;
  bron_kerbosch(adj, current, std::move(candidates), std::move(excluded), best);
  std::sort(best.begin(), best.end());
  return {best, true};
}

std::optional<FlaggedClique> flag_memorized(const GenerationBatch& batch,
                                            double threshold, int clique_min,
                                            int grid_rows, int grid_cols) {
  if (clique_min < 2)
    throw_error(ErrorCategory::Argument, "flag_memorized: clique_min must be >= 2");
  const SimilarityGraph g =
      build_similarity_graph(batch, threshold, grid_rows, grid_cols);
  const CliqueResult clique = largest_clique(g);
  if (static_cast<int>(clique.nodes.size()) < clique_min) return std::nullopt;

  // Medoid: clique member minimizing its summed distance to the others.
  const std::size_t k = clique.nodes.size();
  double best_sum = 0.0;
  int medoid = clique.nodes[0];
  double total = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    double sum = 0.0;
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b) continue;
      sum += tiled_l2(batch.images[clique.nodes[a]], batch.images[clique.nodes[b]],
                      grid_rows, grid_cols);
    }
    if (a == 0 || sum < best_sum) {
      best_sum = sum;
      medoid = clique.nodes[a];
    }
    total += sum;
  }
  FlaggedClique out;
  out.clique = clique.nodes;
  out.representative = medoid;
  out.mean_intra_distance = k > 1 ? total / static_cast<double>(k * (k - 1)) : 0.0;
  out.exact = clique.exact;
  return out;
}

std::optional<TrainingMatch> match_to_training(const Image& xhat,
                                               const Dataset& train,
                                               double delta) {
  if (train.images.empty())
    throw_error(ErrorCategory::Argument, "match_to_training: empty training set");
  if (!(delta > 0.0 && delta < 1.0))
    throw_error(ErrorCategory::Argument, "match_to_training: delta must be in (0,1)");
  int best_id = -1;
  double best_dist = 0.0;
  for (std::size_t i = 0; i < train.images.size(); ++i) {
    const double dist = l2_normalized(xhat, train.images[i]);
    if (best_id < 0 || dist < best_dist) {
      best_id = train.ids[i];
      best_dist = dist;
    }
  }
  if (best_dist <= delta) return TrainingMatch{best_id, best_dist};
  return std::nullopt;
}

int eidetic_count(const Image& x, const Dataset& train, double delta) {
  int count = 0;
  for (const Image& y : train.images)
    if (l2_normalized(x, y) <= delta) ++count;
  return count;
}

ExtractionScanResult untargeted_extraction_scan(
    const std::vector<GenerationBatch>& batches, const Dataset& train,
    const ExtractionScanConfig& cfg) {
  if (train.images.empty())
    throw_error(ErrorCategory::Argument, "extraction scan: empty training set");
  if (cfg.n_neighbors < 1 ||
      static_cast<std::size_t>(cfg.n_neighbors) > train.images.size())
    throw_error(ErrorCategory::Argument, "extraction scan: bad n_neighbors");

  struct Scored {
    int generation_id;
    int training_idx;  // index into train arrays
    double l2;
    double score;
    bool valid;
    std::string warning;
  };

  std::size_t total = 0;
  for (const GenerationBatch& b : batches) total += b.images.size();
  std::vector<const Image*> gens;
  gens.reserve(total);
  for (const GenerationBatch& b : batches) {
    b.validate();
    for (const Image& img : b.images) gens.push_back(&img);
  }

  std::vector<Scored> scored(total);
  parallel_for(
      total,
      [&](std::size_t gi) {
        Scored& rec = scored[gi];
        rec.generation_id = static_cast<int>(gi);
        rec.valid = false;
        std::vector<double> distances(train.images.size());
        for (std::size_t i = 0; i < train.images.size(); ++i)
          distances[i] = l2_normalized(*gens[gi], train.images[i]);
        const NeighborSet nn = nearest_neighbors_from_distances(
            static_cast<int>(gi), distances,
            static_cast<std::size_t>(cfg.n_neighbors));
        rec.training_idx = nn.neighbors[0].id;
        rec.l2 = nn.neighbors[0].distance;
        double mean = 0.0;
        for (const Neighbor& nb : nn.neighbors) mean += nb.distance;
        mean /= static_cast<double>(nn.neighbors.size());
        if (mean == 0.0) {
          rec.warning = "generation " + std::to_string(gi) +
                        ": degenerate neighborhood (mean distance 0)";
          return;
        }
        rec.score = rec.l2 / (cfg.alpha * mean);
        rec.valid = true;
      },
      global_thread_count());

  // First-generation counting with duplicate-group collapsing: a hit claims
  // the whole eidetic group of its matched training image.
  ExtractionScanResult out;
  std::unordered_set<int> claimed;
  for (const Scored& rec : scored) {
    if (!rec.valid) {
      if (!rec.warning.empty()) out.warnings.push_back(rec.warning);
      continue;
    }
    if (rec.score > cfg.score_cutoff || rec.l2 > cfg.delta_extract) continue;

    std::vector<int> group;
    const Image& matched = train.images[rec.training_idx];
    for (std::size_t i = 0; i < train.images.size(); ++i)
      if (l2_normalized(matched, train.images[i]) <= cfg.delta_eidetic)
        group.push_back(train.ids[i]);

    bool already = false;
    for (int id : group)
      if (claimed.count(id)) {
        already = true;
        break;
      }
    if (already) continue;
    for (int id : group) claimed.insert(id);

    ExtractionRecord r;
    r.generation_id = rec.generation_id;
    r.training_id = train.ids[rec.training_idx];
    r.l2 = rec.l2;
    r.score = rec.score;
    r.extracted = true;
    r.eidetic_k = static_cast<int>(group.size());
    out.records.push_back(r);
  }
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const ExtractionRecord& a, const ExtractionRecord& b) {
                     return a.score < b.score;
                   });
  return out;
}

std::vector<PrecisionRecallPoint> precision_recall(
    const std::vector<std::pair<double, bool>>& scored_labels) {
  bool any_positive = false;
  for (const auto& [score, positive] : scored_labels) any_positive |= positive;
  if (!any_positive)
    throw_error(ErrorCategory::Degenerate, "precision_recall: no positive labels");

  std::vector<PrecisionRecallPoint> curve;
  curve.reserve(scored_labels.size());
  int positives = 0;
  for (std::size_t i = 0; i < scored_labels.size(); ++i) {
    if (scored_labels[i].second) ++positives;
    curve.push_back({static_cast<int>(i) + 1, scored_labels[i].first,
                     static_cast<double>(positives) / static_cast<double>(i + 1),
                     positives});
  }
  return curve;
}

}  // namespace memaudit
