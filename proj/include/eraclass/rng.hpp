#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace eraclass {

/// Portable pseudo-random source used for every stochastic step.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard (the 10000th draw of a default-seeded engine is
/// 9981545732273789042). The standard <random> distributions are
/// implementation-defined, so all derived quantities are computed here:
///   - uniform_index(n): rejection sampling on the raw 64-bit draw,
///     rejecting values >= 2^64 - (2^64 mod n), then taking draw mod n.
///   - uniform01(): (draw >> 11) * 2^-53, a double in [0, 1).
///   - shuffle(): Fisher-Yates from the back, swapping i with uniform_index(i+1).
/// Ports to other languages reproduce splits bit-for-bit by following the
/// same three rules.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  std::uint64_t uniform_index(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n + 1) % n;
    std::uint64_t draw = engine_();
    while (draw > limit) draw = engine_();
    return draw % n;
  }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Derives an independent child seed, e.g. one stream per epoch.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace eraclass
