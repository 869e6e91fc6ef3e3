#pragma once

#include <cstdint>

#include "aqsim/bits.hpp"

namespace aqsim {

// All randomness in the library flows through this generator: xoshiro256**
// seeded via splitmix64. Implemented locally (not <random>) so that every
// draw — including bounded integers — is bit-identical across platforms and
// standard libraries, which the reproducibility guarantees depend on.

inline uint64_t splitmix64(uint64_t& s) {
  uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  // Independent per-trial stream: mixes the stream index through splitmix64
  // before seeding, so neighboring indices give unrelated streams.
  static Rng stream(uint64_t master, uint64_t index) {
    uint64_t sm = index + 0x632be59bd9b4e019ULL;
    return Rng(master ^ splitmix64(sm));
  }

  uint64_t u64() {
    uint64_t r = rotl(s_[1] * 5, 7) * 9;
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return r;
  }

  bool bit() { return u64() >> 63; }

  // Uniform in [0, n) by rejection; unbiased.
  uint64_t below(uint64_t n) {
    assert(n > 0);
    uint64_t limit = ~uint64_t{0} - ~uint64_t{0} % n;
    uint64_t r;
    do {
      r = u64();
    } while (r >= limit);
    return r % n;
  }

  // Uniform double in [0, 1) with 53 bits of precision.
  double unit() { return (u64() >> 11) * 0x1.0p-53; }

  BitVec bits(size_t n) {
    BitVec v(n);
    for (size_t i = 0; i < n; ++i) v.set(i, bit());
    return v;
  }

  BitVec nonzero_bits(size_t n) {
    assert(n > 0);
    BitVec v(n);
    do {
      v = bits(n);
    } while (v.none());
    return v;
  }

  // Fisher-Yates; perm[i] = image of position i.
  std::vector<size_t> permutation(size_t n) {
    std::vector<size_t> p(n);
    for (size_t i = 0; i < n; ++i) p[i] = i;
    for (size_t i = n; i > 1; --i) {
      size_t j = below(i);
      std::swap(p[i - 1], p[j]);
    }
    return p;
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

}  // namespace aqsim
