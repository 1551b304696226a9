#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace pmw {

// Deterministic SplitMix64 generator. Every consumer of randomness in the
// pipeline (init, shuffling, dropout, augmentation, synthesis) derives its own
// stream via `stream(label)` or `stream(label, index)`, so the subsystems stay
// independently reproducible: reordering one consumer never perturbs another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1), 53-bit resolution.
  double next_double();
  float next_float();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (no cached spare; stays splittable).
  double next_normal();
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n);
  bool bernoulli(double p);

  // Derive an independent child stream from this generator's seed identity.
  Rng stream(std::string_view label) const;
  Rng stream(std::string_view label, std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;   // identity, fixed at construction
  std::uint64_t state_;  // advances with each draw
};

// FNV-1a 64-bit over arbitrary bytes. Used for content hashes, weight-file
// checksums, and rng stream derivation.
std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t basis = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(std::string_view s);

// Seeded Fisher-Yates.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  if (v.size() < 2) return;
  for (std::size_t i = v.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
    std::swap(v[i], v[j]);
  }
}

}  // namespace pmw
