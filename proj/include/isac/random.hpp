#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace isac {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Seedable, splittable random stream. Child streams are a pure function of
/// the parent key and the child index, so work can be partitioned freely
/// without changing what any single stream produces.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(detail::splitmix64(seed)) { reseed(); }

  Rng split(std::uint64_t child) const {
    Rng out;
    out.key_ = detail::splitmix64(key_ ^ detail::splitmix64(child + 0x632be59bd9b4e019ULL));
    out.reseed();
    return out;
  }

  std::uint64_t key() const { return key_; }

  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }
  double normal() { return normal_(engine_); }
  bool bernoulli(double p) { return uniform_(engine_) < p; }

  /// CN(0, variance): real and imaginary parts N(0, variance / 2).
  std::complex<double> complex_normal(double variance = 1.0) {
    const double s = std::sqrt(variance * 0.5);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  Rng() = default;

  void reseed() {
    std::seed_seq seq{static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)};
    engine_.seed(seq);
    normal_.reset();
  }

  std::uint64_t key_ = 0;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace isac
