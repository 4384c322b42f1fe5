#pragma once

// Deterministic, splittable random streams for the simulation harness.
//
// Stream derivation rule (fixed; identical on every platform):
//   state0 = mix(mix(mix(master_seed) ^ (0xA0761D6478BD642F + stream))
//                ^ (0xE7037ED1A0B428DB + rep))
// where mix is the SplitMix64 finalizer (add golden gamma, xor-shift-multiply
// twice, final xor-shift). The xoshiro256++ state is then the next four
// SplitMix64 outputs from state0. Streams index experiment settings, reps
// index Monte Carlo replications; any (master_seed, stream, rep) triple can
// be opened directly, so replications are order-insensitive.

#include <cstdint>
#include <numbers>
#include <cmath>

namespace isotone {

namespace detail {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t z) {
  std::uint64_t s = z;
  return splitmix64_next(s);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

inline std::uint64_t derive_stream_seed(std::uint64_t master_seed,
                                        std::uint64_t stream,
                                        std::uint64_t rep) {
  std::uint64_t h = detail::mix64(master_seed);
  h = detail::mix64(h ^ (0xA0761D6478BD642FULL + stream));
  h = detail::mix64(h ^ (0xE7037ED1A0B428DBULL + rep));
  return h;
}

// xoshiro256++ with Box-Muller normals; no library distributions, so the
// sequence is bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = detail::splitmix64_next(sm);
  }

  static Rng stream(std::uint64_t master_seed, std::uint64_t stream,
                    std::uint64_t rep) {
    return Rng(derive_stream_seed(master_seed, stream, rep));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second draw of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_[4] = {};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace isotone
