#include <doctest.h>

#include <cmath>

#include "memaudit/error.hpp"
#include "memaudit/model.hpp"
#include "memaudit/parallel.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/synth.hpp"
#include "memaudit/train.hpp"

using namespace memaudit;

namespace {

Dataset tiny_data(int n = 16) {
  SynthConfig cfg;
  cfg.n = n;
  cfg.h = 8;
  cfg.w = 8;
  cfg.seed = 4;
  return synth_blobs(cfg).data;
}

ArchConfig arch_for(const Dataset& d) {
  ArchConfig arch;
  arch.h = d.images[0].h;
  arch.w = d.images[0].w;
  arch.c = d.images[0].c;
  arch.hidden = {32};
  arch.time_embed_dim = 8;
  return arch;
}

double mean_loss(const DenoiserModel& m, const NoiseSchedule& s,
                 const Dataset& data, std::uint64_t seed) {
  Rng rng(seed);
  double acc = 0.0;
  int count = 0;
  std::vector<double> eps(data.images[0].dim());
  for (const Image& x : data.images) {
    for (int t : {1, s.T / 2, s.T}) {
      rng.fill_gaussian(eps);
      acc += diffusion_loss(m, s, x, t, eps);
      ++count;
    }
  }
  return acc / count;
}

}  // namespace

TEST_CASE("config validation") {
  TrainingConfig cfg;
  cfg.steps = 10;
  CHECK_NOTHROW(cfg.validate());
  cfg.noise_multiplier = 1.0;  // noising without clipping is rejected
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.clip_norm = 1.0;
  CHECK_NOTHROW(cfg.validate());
  cfg.clip_norm = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = TrainingConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("config json round trip") {
  TrainingConfig cfg;
  cfg.steps = 42;
  cfg.batch_size = 7;
  cfg.learning_rate = 3e-4;
  cfg.seed = 9;
  cfg.flip_augment = true;
  cfg.clip_norm = 2.5;
  cfg.noise_multiplier = 0.1;
  cfg.checkpoint_every = 10;
  const TrainingConfig back = TrainingConfig::from_json(cfg.to_json());
  CHECK(back.steps == cfg.steps);
  CHECK(back.batch_size == cfg.batch_size);
  CHECK(back.learning_rate == cfg.learning_rate);
  CHECK(back.seed == cfg.seed);
  CHECK(back.flip_augment == cfg.flip_augment);
  CHECK(back.clip_norm == cfg.clip_norm);
  CHECK(back.noise_multiplier == cfg.noise_multiplier);
  CHECK(back.checkpoint_every == cfg.checkpoint_every);
}

TEST_CASE("zero steps returns the initialized model") {
  const Dataset data = tiny_data();
  const NoiseSchedule s = make_schedule(20, 1e-3, 0.2);
  TrainingConfig cfg;
  cfg.steps = 0;
  cfg.seed = 8;
  const ArchConfig arch = arch_for(data);
  const DenoiserModel m = train(data, cfg, s, arch);
  const DenoiserModel init =
      DenoiserModel::random_init(arch, derive_seed(cfg.seed, "init", 0));
  CHECK(m.theta() == init.theta());
}

TEST_CASE("training is deterministic and thread-count independent") {
  const Dataset data = tiny_data();
  const NoiseSchedule s = make_schedule(20, 1e-3, 0.2);
  TrainingConfig cfg;
  cfg.steps = 12;
  cfg.batch_size = 8;
  cfg.seed = 5;
  cfg.flip_augment = true;
  const ArchConfig arch = arch_for(data);

  const unsigned saved = global_thread_count();
  global_thread_count() = 1;
  const DenoiserModel a = train(data, cfg, s, arch);
  global_thread_count() = 4;
  const DenoiserModel b = train(data, cfg, s, arch);
  global_thread_count() = saved;
  CHECK(a.theta() == b.theta());

  TrainingConfig other = cfg;
  other.seed = 6;
  const DenoiserModel c = train(data, other, s, arch);
  CHECK(a.theta() != c.theta());
}

TEST_CASE("loss decreases from the initial model") {
  const Dataset data = tiny_data(24);
  const NoiseSchedule s = make_schedule(20, 1e-3, 0.2);
  TrainingConfig cfg;
  cfg.steps = 400;
  cfg.batch_size = 16;
  cfg.seed = 2;
  const ArchConfig arch = arch_for(data);
  const DenoiserModel before =
      DenoiserModel::random_init(arch, derive_seed(cfg.seed, "init", 0));
  const DenoiserModel after = train(data, cfg, s, arch);
  CHECK(mean_loss(after, s, data, 1) < mean_loss(before, s, data, 1));
}

TEST_CASE("checkpoint sink fires at multiples and the final step") {
  const Dataset data = tiny_data();
  const NoiseSchedule s = make_schedule(20, 1e-3, 0.2);
  TrainingConfig cfg;
  cfg.steps = 25;
  cfg.seed = 3;
  cfg.checkpoint_every = 10;
  std::vector<long> steps;
  train(data, cfg, s, arch_for(data),
        [&](long step, const DenoiserModel&) { steps.push_back(step); });
  CHECK(steps == std::vector<long>{0, 10, 20, 25});
}

TEST_CASE("clip and noise settings still converge deterministically") {
  const Dataset data = tiny_data();
  const NoiseSchedule s = make_schedule(20, 1e-3, 0.2);
  TrainingConfig cfg;
  cfg.steps = 10;
  cfg.seed = 7;
  cfg.clip_norm = 1.0;
  cfg.noise_multiplier = 0.01;
  const ArchConfig arch = arch_for(data);
  const DenoiserModel a = train(data, cfg, s, arch);
  const DenoiserModel b = train(data, cfg, s, arch);
  CHECK(a.theta() == b.theta());
  for (double v : a.theta()) CHECK(std::isfinite(v));
}

TEST_CASE("empty dataset rejected") {
  const NoiseSchedule s = make_schedule(20, 1e-3, 0.2);
  TrainingConfig cfg;
  cfg.steps = 1;
  ArchConfig arch;
  arch.h = arch.w = 8;
  arch.c = 1;
  arch.hidden = {8};
  arch.time_embed_dim = 4;
  CHECK_THROWS_AS(train(Dataset{}, cfg, s, arch), Error);
}
