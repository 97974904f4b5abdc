#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sonalign {

// splitmix64 finalizer; good avalanche, used for seed derivation and hashing.
constexpr uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from (base, stream, index).
constexpr uint64_t derive_seed(uint64_t base, uint64_t stream, uint64_t index = 0) {
  uint64_t h = mix64(base);
  h = mix64(h ^ mix64(stream + 0x517cc1b727220a95ULL));
  h = mix64(h ^ mix64(index + 0x2545f4914f6cdd1dULL));
  return h;
}

// mt19937_64 engine with explicit value mappings, so generated streams do not
// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n); n must be nonzero.
  uint64_t below(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller; two engine draws per value, no cached spare.
  double normal() {
    const double u1 = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace sonalign
