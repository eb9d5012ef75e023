#include <benchmark/benchmark.h>

#include "memaudit/extraction.hpp"
#include "memaudit/membership.hpp"
#include "memaudit/metrics.hpp"
#include "memaudit/model.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/sampler.hpp"
#include "memaudit/schedule.hpp"

using namespace memaudit;

namespace {

Image random_image(int h, int w, std::uint64_t seed) {
  Image img(h, w, 1);
  Rng rng(seed);
  for (double& p : img.pixels) p = rng.uniform();
  return img;
}

std::vector<Image> random_corpus(int n, int hw, std::uint64_t seed) {
  std::vector<Image> corpus;
  corpus.reserve(n);
  for (int i = 0; i < n; ++i) corpus.push_back(random_image(hw, hw, seed + i));
  return corpus;
}

ArchConfig desk_arch(int hw, int hidden) {
  ArchConfig a;
  a.h = a.w = hw;
  a.c = 1;
  a.hidden = {hidden};
  a.time_embed_dim = 32;
  return a;
}

void BM_NearestNeighbors(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto corpus = random_corpus(n, 16, 1);
  const Image query = random_image(16, 16, 9999);
  for (auto _ : state)
    benchmark::DoNotOptimize(nearest_neighbors(query, -1, corpus, 50));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_NearestNeighbors)->Arg(512)->Arg(2048);

void BM_AllPairsTiled(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  GenerationBatch batch;
  batch.images = random_corpus(n, 16, 2);
  for (int i = 0; i < n; ++i) batch.seeds.push_back(i);
  for (auto _ : state)
    benchmark::DoNotOptimize(build_similarity_graph(batch, 0.1, 2, 2));
  state.SetItemsProcessed(state.iterations() * n * (n - 1) / 2);
}
BENCHMARK(BM_AllPairsTiled)->Arg(64)->Arg(256);

void BM_LargestClique(benchmark::State& state) {
  Rng rng(3);
  SimilarityGraph g;
  g.node_count = static_cast<int>(state.range(0));
  for (int i = 0; i < g.node_count; ++i)
    for (int j = i + 1; j < g.node_count; ++j)
      if (rng.uniform() < 0.3) g.edges.push_back({i, j, 0.01});
  for (auto _ : state) benchmark::DoNotOptimize(largest_clique(g));
}
BENCHMARK(BM_LargestClique)->Arg(64)->Arg(128);

void BM_Sampling(benchmark::State& state) {
  const DenoiserModel m = DenoiserModel::random_init(desk_arch(16, 128), 4);
  const NoiseSchedule s = make_schedule(100, 1e-3, 0.2);
  GenerationRequest req;
  req.seed = 5;
  req.count = 8;
  const int stride = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample(m, s, req, stride));
  state.SetItemsProcessed(state.iterations() * req.count);
}
BENCHMARK(BM_Sampling)->Arg(1)->Arg(4);

void BM_AveragedLoss(benchmark::State& state) {
  const DenoiserModel m = DenoiserModel::random_init(desk_arch(16, 128), 6);
  const NoiseSchedule s = make_schedule(100, 1e-3, 0.2);
  const Image x = random_image(16, 16, 7);
  const int n_noise = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(averaged_loss(m, s, x, 10, n_noise, true, 8));
  state.SetItemsProcessed(state.iterations() * n_noise * 2);
}
BENCHMARK(BM_AveragedLoss)->Arg(1)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
