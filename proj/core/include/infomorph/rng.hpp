#pragma once

#include <cstdint>
#include <initializer_list>

namespace infomorph {

// Stateful splitmix64 generator. Used wherever a sequential stream is fine
// (weight init, shuffles, CMA-ES sampling). Self-contained so that results
// do not depend on the standard library's distribution implementations.
class Rng64 {
 public:
  explicit Rng64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n) without modulo bias.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::uint64_t state_;
};

// Counter-addressed uniform draws: the value depends only on the seed and the
// draw coordinates, never on evaluation order. Training uses one logical
// stream per (neuron, batch, iteration, sample) so that parallel scheduling
// cannot change results.
inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  std::uint64_t z = h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t counter_hash(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (std::uint64_t p : parts) h = hash_combine(h, p);
  return h;
}

inline double counter_uniform(std::initializer_list<std::uint64_t> parts) {
  return static_cast<double>(counter_hash(parts) >> 11) * 0x1.0p-53;
}

}  // namespace infomorph
