#pragma once

#include <cstdint>
#include <vector>

#include "memaudit/dataset.hpp"

namespace memaudit {

// Deterministic toy corpus: smooth gaussian-blob images with optional exact
// duplicate groups planted at known ids, used by the experiment drivers and
// tests as a stand-in for a real image dataset.
struct SynthConfig {
  int n = 512;  // total images including planted duplicates
  int h = 16;
  int w = 16;
  int c = 1;
  std::uint64_t seed = 0;
  // Each entry k plants one fresh image repeated k times (k >= 2).
  std::vector<int> duplicate_counts;
  bool labeled = false;
  int num_classes = 2;
};

struct SynthResult {
  Dataset data;
  // Ids of each planted duplicate group, in duplicate_counts order. The same
  // groups are recorded in data.manifest["planted_groups"].
  std::vector<std::vector<int>> planted_groups;
};

SynthResult synth_blobs(const SynthConfig& cfg);

}  // namespace memaudit
