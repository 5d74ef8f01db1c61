#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rfmkrr {

// One splitmix64 step. Used for seed derivation only, never as the
// sampling stream itself.
constexpr std::uint64_t split_mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-sensitive seed derivation: combine(a,b) != combine(b,a).
constexpr std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b) {
  return split_mix64(split_mix64(a) ^ (b + 0xd1b54a32d192ed03ULL));
}

constexpr std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b,
                                     std::uint64_t c) {
  return seed_combine(seed_combine(a, b), c);
}

// Deterministic sampling stream. The engine (mt19937_64) and all variate
// transforms here are fully specified, so a given seed produces the same
// draws on every platform; std::*_distribution is avoided for that reason.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // in [0, 1)
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // in (0, 1], safe under log()
  double uniform_open() {
    return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; the spare keeps draw cost at one transform per two calls.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u = uniform_open();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double t = 2.0 * M_PI * v;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  // Standard Cauchy by inverse CDF.
  double cauchy() { return std::tan(M_PI * (uniform() - 0.5)); }

  // Unbiased integer in [0, bound) via rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = eng_();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rfmkrr
