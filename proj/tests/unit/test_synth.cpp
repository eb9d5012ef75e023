#include <doctest.h>

#include <set>

#include "memaudit/error.hpp"
#include "memaudit/synth.hpp"

using namespace memaudit;

TEST_CASE("generation is deterministic in the seed") {
  SynthConfig cfg;
  cfg.n = 32;
  cfg.h = 8;
  cfg.w = 8;
  cfg.seed = 5;
  const SynthResult a = synth_blobs(cfg);
  const SynthResult b = synth_blobs(cfg);
  REQUIRE(a.data.size() == 32);
  for (int i = 0; i < 32; ++i)
    CHECK(a.data.images[i].pixels == b.data.images[i].pixels);

  cfg.seed = 6;
  const SynthResult c = synth_blobs(cfg);
  CHECK(a.data.images[0].pixels != c.data.images[0].pixels);
}

TEST_CASE("images have the requested shape and range") {
  SynthConfig cfg;
  cfg.n = 8;
  cfg.h = 6;
  cfg.w = 10;
  cfg.c = 1;
  cfg.seed = 1;
  const Dataset data = synth_blobs(cfg).data;
  for (const Image& img : data.images) {
    CHECK(img.h == 6);
    CHECK(img.w == 10);
    CHECK(img.c == 1);
    for (double p : img.pixels) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }
  CHECK_NOTHROW(data.validate());
  CHECK(data.manifest.at("source") == "synth-blobs");
}

TEST_CASE("planted duplicate groups are exact copies at the recorded ids") {
  SynthConfig cfg;
  cfg.n = 40;
  cfg.h = 8;
  cfg.w = 8;
  cfg.seed = 9;
  cfg.duplicate_counts = {4, 2};
  const SynthResult result = synth_blobs(cfg);
  REQUIRE(result.data.size() == 40);
  REQUIRE(result.planted_groups.size() == 2);
  CHECK(result.planted_groups[0].size() == 4);
  CHECK(result.planted_groups[1].size() == 2);

  std::set<int> seen;
  for (const auto& group : result.planted_groups) {
    const Image& first = result.data.images[group[0]];
    for (int id : group) {
      CHECK(result.data.images[id].pixels == first.pixels);
      CHECK(seen.insert(id).second);  // groups are disjoint
    }
  }
  // Non-group images are all distinct from the planted representatives.
  for (int id = 0; id < 40; ++id) {
    if (seen.count(id)) continue;
    for (const auto& group : result.planted_groups)
      CHECK(result.data.images[id].pixels !=
            result.data.images[group[0]].pixels);
  }
  CHECK(result.data.manifest.at("planted_groups").size() == 2);
}

TEST_CASE("labeled output carries labels within range") {
  SynthConfig cfg;
  cfg.n = 16;
  cfg.h = 8;
  cfg.w = 8;
  cfg.seed = 2;
  cfg.labeled = true;
  cfg.num_classes = 3;
  const Dataset data = synth_blobs(cfg).data;
  REQUIRE(data.labels.has_value());
  std::set<int> used;
  for (int label : *data.labels) {
    CHECK(label >= 0);
    CHECK(label < 3);
    used.insert(label);
  }
  CHECK(used.size() > 1);
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.n = 0;
  CHECK_THROWS_AS(synth_blobs(cfg), Error);
  cfg.n = 8;
  cfg.h = 0;
  CHECK_THROWS_AS(synth_blobs(cfg), Error);
  cfg.h = 8;
  cfg.w = 8;
  cfg.duplicate_counts = {1};  // a group of one is not a duplicate
  CHECK_THROWS_AS(synth_blobs(cfg), Error);
  cfg.duplicate_counts = {100};  // exceeds n
  CHECK_THROWS_AS(synth_blobs(cfg), Error);
  cfg.duplicate_counts = {};
  cfg.labeled = true;
  cfg.num_classes = 1;
  CHECK_THROWS_AS(synth_blobs(cfg), Error);
}
