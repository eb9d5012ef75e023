#include "memaudit/synth.hpp"

#include <algorithm>
#include <cmath>

#include "memaudit/error.hpp"
#include "memaudit/rng.hpp"

namespace memaudit {

namespace {

Image blob_image(int h, int w, int c, int label, int num_classes, Rng& rng) {
  Image img;
  img.h = h;
  img.w = w;
  img.c = c;
  img.pixels.assign(static_cast<std::size_t>(h) * w * c, 0.05);
  const int blobs = 1 + static_cast<int>(rng.uniform_index(3));
  // Labels shift the brightness band so conditioning is learnable.
  const double base_amp =
      label < 0 ? 0.9 : 0.5 + 0.4 * (label + 1.0) / num_classes;
  for (int b = 0; b < blobs; ++b) {
    const double cy = rng.uniform() * (h - 1);
    const double cx = rng.uniform() * (w - 1);
    const double sigma = 1.0 + rng.uniform() * 0.25 * std::min(h, w);
    const double amp = base_amp * (0.6 + 0.4 * rng.uniform());
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        const double v = amp * std::exp(-d2 / (2.0 * sigma * sigma));
        for (int ch = 0; ch < c; ++ch) {
          const double tint = c == 1 ? 1.0 : 0.7 + 0.3 * ch / (c - 1.0);
          double& p = img.pixels[(static_cast<std::size_t>(y) * w + x) * c + ch];
          p = std::min(1.0, p + v * tint);
        }
      }
    }
  }
  return img;
}

}  // namespace

SynthResult synth_blobs(const SynthConfig& cfg) {
  if (cfg.n < 1 || cfg.h < 1 || cfg.w < 1 || cfg.c < 1)
    throw_error(ErrorCategory::Argument, "synth_blobs: bad shape or count");
  if (cfg.labeled && cfg.num_classes < 2)
    throw_error(ErrorCategory::Argument, "synth_blobs: need at least two classes");
  int planted_total = 0;
  for (int k : cfg.duplicate_counts) {
    if (k < 2)
      throw_error(ErrorCategory::Argument,
                  "synth_blobs: duplicate counts must be >= 2");
    planted_total += k;
  }
  if (planted_total > cfg.n)
    throw_error(ErrorCategory::Argument,
                "synth_blobs: duplicates exceed the requested size");

  SynthResult result;
  Dataset& data = result.data;
  if (cfg.labeled) data.labels.emplace();
  data.images.reserve(cfg.n);

  int unique_index = 0;
  auto emit = [&](const Image& img, int label) {
    data.images.push_back(img);
    if (cfg.labeled) data.labels->push_back(label);
    data.ids.push_back(static_cast<int>(data.ids.size()));
  };
  auto fresh = [&](int* label_out) {
    Rng rng(derive_seed(cfg.seed, "synth", unique_index++));
    const int label =
        cfg.labeled ? static_cast<int>(rng.uniform_index(cfg.num_classes)) : -1;
    if (label_out) *label_out = label;
    return blob_image(cfg.h, cfg.w, cfg.c, label, cfg.num_classes, rng);
  };

  for (int k : cfg.duplicate_counts) {
    int label = -1;
    const Image img = fresh(&label);
    std::vector<int> group;
    for (int r = 0; r < k; ++r) {
      group.push_back(static_cast<int>(data.ids.size()));
      emit(img, label);
    }
    result.planted_groups.push_back(std::move(group));
  }
  while (static_cast<int>(data.size()) < cfg.n) {
    int label = -1;
    const Image img = fresh(&label);
    emit(img, label);
  }

  data.manifest["source"] = "synth-blobs";
  data.manifest["seed"] = cfg.seed;
  data.manifest["planted_groups"] = result.planted_groups;
  return result;
}

}  // namespace memaudit
