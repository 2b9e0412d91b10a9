#pragma once

#include <cstdint>
#include <random>

namespace provgraph {

// SplitMix64 finalizer. Used as the avalanche mixer for every derived seed
// in the library (per-graph seeds, per-fold seeds, dropout streams).
std::uint64_t mix64(std::uint64_t x) noexcept;

// Derives the seed of stream `index` from a parent seed:
//   mix64(parent + 0x9E3779B97F4A7C15 * (index + 1))
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

// Thin wrapper over std::mt19937_64. The conversions to bounded integers,
// unit reals and normals are spelled out here rather than delegated to the
// <random> distributions, whose output is implementation-defined; datasets
// must be bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_index(std::uint64_t bound);

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via the Box-Muller transform.
  double normal();

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace provgraph
