#pragma once

// Deterministic-by-key random streams. Every random quantity in a run is a
// function of (seed, purpose, key...), so evaluation order never changes
// results and schemes sharing a seed see identical traffic and channels.

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace dtdd::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t mix_key(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p + 0x2545f4914f6cdd1dULL));
  return h;
}

/// Purpose tags keep the streams for different quantities disjoint.
enum class Stream : std::uint64_t {
  kPlacement = 1,
  kShadowing = 2,
  kFading = 3,
  kArrivals = 4,
  kDecode = 5,
};

/// SplitMix64 as a UniformRandomBitGenerator, so standard distributions can
/// draw from a keyed stream.
class KeyedEngine {
 public:
  using result_type = std::uint64_t;

  explicit KeyedEngine(std::uint64_t state) : state_(state) {}
  KeyedEngine(std::uint64_t seed, Stream stream, std::initializer_list<std::uint64_t> key)
      : state_(mix_key(seed ^ (static_cast<std::uint64_t>(stream) << 56), key)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace dtdd::rng
