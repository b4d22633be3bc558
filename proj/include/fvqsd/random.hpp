#pragma once

// Small-state random streams. Every particle (or path) owns one stream,
// derived from the run seed and its index, so results do not depend on the
// order in which streams are advanced.

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace fvqsd {

/// SplitMix64 step, used for seeding.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ (Blackman & Vigna). 32 bytes of state, satisfies
/// UniformRandomBitGenerator.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  Xoshiro256pp() : Xoshiro256pp(0) {}
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  /// Independent stream `index` of the family rooted at `seed`.
  static Xoshiro256pp stream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t sm = seed;
    const std::uint64_t root = splitmix64(sm);
    std::uint64_t mix = root ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    return Xoshiro256pp(splitmix64(mix));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  friend bool operator==(const Xoshiro256pp&, const Xoshiro256pp&) = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
};

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Xoshiro256pp& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Standard normal variate (ziggurat).
inline double standard_normal(Xoshiro256pp& rng) {
  boost::random::normal_distribution<double> normal;
  return normal(rng);
}

/// Uniform integer in [lo, hi].
inline std::uint64_t uniform_index(Xoshiro256pp& rng, std::uint64_t lo, std::uint64_t hi) {
  boost::random::uniform_int_distribution<std::uint64_t> dist(lo, hi);
  return dist(rng);
}

}  // namespace fvqsd
