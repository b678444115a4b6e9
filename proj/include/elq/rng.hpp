#pragma once

#include <cstdint>
#include <string_view>

namespace elq {

// splitmix64: counter-based generator with a fixed, portable definition.
// Every derived random quantity in the project bottoms out here so that
// results are identical across platforms and runs.
struct SplitMix64 {
  uint64_t state;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1). 53 mantissa bits, exact arithmetic.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [-1, 1).
  double next_signed_unit() { return 2.0 * next_unit() - 1.0; }

  // Uniform integer in [0, bound) without modulo bias.
  uint64_t next_below(uint64_t bound) {
    uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }
};

inline uint64_t fnv1a64(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t hash_combine(uint64_t seed, std::string_view bytes) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((seed >> (8 * i)) & 0xff);
  return fnv1a64(bytes, fnv1a64(std::string_view(buf, 8)));
}

}  // namespace elq
