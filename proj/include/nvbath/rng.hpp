#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace nvbath {

// SplitMix64 finalizer (Steele, Lea, Flood). Used only to derive independent
// stream seeds; the streams themselves are mt19937_64.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Hierarchical seed splitting: derive_seed(seed, {cell, index, ...}).
// Every random quantity in the toolkit is drawn from a stream whose seed is
// obtained this way from the single user seed, so results do not depend on
// how work is scheduled across threads.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(seed ^ 0x6A09E667F3BCC909ULL);
  for (auto p : path) h = splitmix64(h ^ splitmix64(p + 0x3C6EF372FE94F82BULL));
  return h;
}

// Stream-name tags used as the first element of derive_seed paths.
namespace stream {
inline constexpr std::uint64_t bath = 1;
inline constexpr std::uint64_t bath_state = 2;
inline constexpr std::uint64_t sweep_cell = 3;
inline constexpr std::uint64_t benchmark = 4;
inline constexpr std::uint64_t yield = 5;
inline constexpr std::uint64_t visibility = 6;
inline constexpr std::uint64_t validation = 7;
}  // namespace stream

// Portable random stream: mt19937_64 output is fixed by the standard, and the
// conversions below avoid the implementation-defined std distributions so the
// same seed gives the same numbers with any standard library.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1].
  double uniform_pos() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

  // Uniform integer in [0, n), unbiased (rejection on the top bits).
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  double exponential() { return -std::log(uniform_pos()); }

  // Poisson variate by counting unit-rate arrivals; O(mean) work, which is
  // always dominated by the per-point work of the callers.
  std::uint64_t poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    std::uint64_t n = 0;
    double acc = exponential();
    while (acc <= mean) {
      ++n;
      acc += exponential();
    }
    return n;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace nvbath
