#pragma once

// Deterministic random streams with per-trial substreams. Each trial's
// stream depends only on (dataset seed, trial id), so datasets are
// byte-identical regardless of generation order or thread count.

#include <cmath>
#include <cstdint>
#include <random>

namespace atomread {

/// SplitMix64 mixing step; the standard seeding finalizer.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives the substream seed for one trial (or bootstrap replicate) of a
/// seeded run. Pure function of (seed, stream_id).
inline std::uint64_t substream_seed(std::uint64_t seed,
                                    std::uint64_t stream_id) noexcept {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s = stream_id;
  std::uint64_t b = splitmix64(s);
  s = a ^ (b + 0x9E3779B97F4A7C15ULL);
  return splitmix64(s);
}

/// Random stream with explicitly specified draw transformations, so output
/// is reproducible across platforms and standard-library versions.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  static RandomStream substream(std::uint64_t seed, std::uint64_t stream_id) {
    return RandomStream(substream_seed(seed, stream_id));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Exponential with the given rate (1/s). rate == 0 yields +infinity.
  double exponential(double rate) {
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log1p(-uniform()) / rate;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller (uncached; two uniforms per draw).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586 * u2);
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace atomread
