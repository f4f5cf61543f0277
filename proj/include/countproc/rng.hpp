#ifndef COUNTPROC_RNG_HPP
#define COUNTPROC_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace countproc {

/// xoshiro256++ generator keyed by (seed, stream index).
///
/// Each stream is an independent substream: the 256-bit state is filled by
/// SplitMix64 from a mix of the seed and the stream index, so a run is
/// reproducible from (seed, path index) no matter how paths are distributed
/// across workers. Satisfies UniformRandomBitGenerator, so the standard
/// distributions can draw from it directly.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
    // Burn one round so that adjacent streams decorrelate before filling.
    x = splitmix(x) ^ stream;
    for (auto& word : state_) {
      x += 0x9E3779B97F4A7C15ULL;
      word = splitmix(x);
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    for (;;) {
      const double u = static_cast<double>((*this)() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  double exponential() { return -std::log(uniform()); }

  double normal() {
    std::normal_distribution<double> dist;
    return dist(*this);
  }

  /// Gamma draw with the given shape and *rate*.
  double gamma(double shape, double rate) {
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(*this);
  }

  std::int64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(*this);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t splitmix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace countproc

#endif  // COUNTPROC_RNG_HPP
