#pragma once

#include <cstdint>
#include <limits>

namespace tilt {

/// SplitMix64 finaliser. Used to expand seeds and to derive stream keys.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Key of stream `k` under master seed `seed`:
///   stream_k = splitmix64(splitmix64(seed) ^ splitmix64(k + 0x632BE59BD9B4E019))
/// Distinct (seed, k) pairs give statistically independent xoshiro states.
constexpr std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t k) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
}

/// xoshiro256** generator. Satisfies UniformRandomBitGenerator so it can
/// drive the <random> distributions; also provides the handful of variates
/// the samplers need directly.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key) noexcept;

  /// Generator for stream `k` of master `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t k) noexcept {
    return Rng(derive_stream(seed, k));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal (Marsaglia polar method, spare value cached).
  double normal() noexcept;

  /// Standard exponential.
  double exponential() noexcept;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tilt
