#pragma once

#include <cstdint>
#include <vector>

namespace quantbench {

// Deterministic 64-bit generator (splitmix64 steps). We deliberately avoid
// std::mt19937 + <random> distributions: the standard does not pin the output
// of the distribution adaptors, and runs must reproduce bit-for-bit across
// toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound), bound > 0. Rejection sampling, no modulo bias.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0ull - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform in [0, 1), 53 bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// Hash-combines (a, b) and XORs into seed; used to derive per-sample seeds so
// any single sample can be regenerated in isolation.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  Rng h(a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull);
  h.next_u64();
  return seed ^ h.next_u64();
}

// Uniform point on the (k-1)-simplex via normalized exponential spacings.
std::vector<double> random_simplex_point(Rng& rng, std::size_t k);

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace quantbench
