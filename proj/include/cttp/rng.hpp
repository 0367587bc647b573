// Deterministic random streams for the samplers.
//
// The generator is fixed so that a (seed, stream_id, draw sequence) triple
// produces identical outputs on every platform and build:
//   - state seeding: SplitMix64 over mix64(seed ^ mix64(stream_id ^ GOLDEN))
//   - core generator: xoshiro256++ (Blackman/Vigna, public domain)
//   - uniform01(): (next() >> 11) * 2^-53, a double in [0, 1)
//   - uniform_below(n): Lemire's multiply-with-rejection, exactly uniform
// Do not change any of these without bumping the documented RNG version.

#pragma once

#include <cstdint>

namespace cttp {

constexpr uint64_t kGolden64 = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer, used for seeding only.
inline uint64_t mix64(uint64_t z) {
  z += kGolden64;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RandomStream {
 public:
  RandomStream() : RandomStream(0, 0) {}

  RandomStream(uint64_t seed, uint64_t stream_id) { reseed(seed, stream_id); }

  void reseed(uint64_t seed, uint64_t stream_id) {
    seed_ = seed;
    stream_id_ = stream_id;
    draws_ = 0;
    uint64_t z = mix64(seed ^ mix64(stream_id ^ kGolden64));
    for (auto& s : state_) {
      z += kGolden64;
      uint64_t x = z;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
      s = x ^ (x >> 31);
    }
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  uint64_t next_u64() {
    ++draws_;
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1), 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Exactly uniform integer in [0, n). Requires n >= 1.
  uint64_t uniform_below(uint64_t n) {
    uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<uint64_t>(m);
    if (lo < n) {
      const uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  int fair_bit() { return static_cast<int>(next_u64() >> 63); }

  uint64_t draw_count() const { return draws_; }
  uint64_t seed() const { return seed_; }
  uint64_t stream_id() const { return stream_id_; }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t state_[4];
  uint64_t seed_ = 0;
  uint64_t stream_id_ = 0;
  uint64_t draws_ = 0;
};

}  // namespace cttp
