#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace cim {

namespace detail {
// SplitMix64 finalizer; used both as a stream mixer and as a seed derivation hash.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Deterministic random stream. Distribution code is hand-rolled on top of
// mt19937_64 so that identical seeds give identical draws independent of the
// standard library's <random> distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(detail::splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0,1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Unbiased integer in [0, bound) by rejection.
  std::uint64_t uniform_below(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  int uniform_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(uniform_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Box-Muller without a cached spare so a call consumes a fixed amount of stream.
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent sub-stream from a master seed and a key path, e.g.
// substream(master, {kReplicate, r}) for replicate r. Keys are folded through
// splitmix64 so nearby keys give unrelated streams.
inline Rng substream(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = detail::splitmix64(master);
  for (std::uint64_t k : keys) s = detail::splitmix64(s ^ detail::splitmix64(k));
  return Rng(s);
}

}  // namespace cim
