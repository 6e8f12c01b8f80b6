#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace absa {

// Deterministic splitmix64 generator. The standard <random> distributions
// are implementation-defined, so every seeded operation in the toolkit
// draws through this class to stay bit-reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound), bound > 0. Multiply-shift; the bias for any
  // desk-scale bound is far below reproducibility concerns.
  std::uint32_t below(std::uint32_t bound) {
    const std::uint64_t x = next_u64() >> 32;
    return static_cast<std::uint32_t>((x * bound) >> 32);
  }

  // Uniform in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // Fisher-Yates.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = below(static_cast<std::uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// FNV-1a over the stage tag, mixed into the root seed. Every pipeline
// stage derives its own stream so stages stay independently reproducible.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage);

}  // namespace absa
