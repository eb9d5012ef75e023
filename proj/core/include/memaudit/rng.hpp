#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace memaudit {

// Deterministic random stream. mt19937_64 output is fully specified by the
// standard; the uniform and gaussian transforms below are explicit so results
// are bit-identical across compilers (std::normal_distribution is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via Box-Muller; caches the second deviate.
  double gaussian();

  void fill_gaussian(std::vector<double>& out);

  bool coin_flip() { return (engine_() & 1u) != 0; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stable seed fan-out: child = hash(master, stage, index). FNV-1a over the
// byte expansion, folded through splitmix64 for diffusion.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                          std::uint64_t index);

}  // namespace memaudit
