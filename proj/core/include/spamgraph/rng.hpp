#pragma once

#include <cstdint>
#include <iterator>
#include <random>
#include <utility>

namespace spamgraph {

// Seeded PRNG. Distribution transforms are written out here, so streams do not
// depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, bound). bound must be nonzero.
  std::uint64_t below(std::uint64_t bound);

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  // Standard normal via Box-Muller (no cached second value).
  double normal();

  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::uint64_t>(std::distance(first, last));
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      using std::swap;
      swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace spamgraph
