#pragma once

// Reproducible random streams: mt19937_64 engines seeded through splitmix64.
//
// Only the raw 64-bit engine output is used; the variate transforms below are written out
// so that draws do not depend on the standard library's distribution implementations.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "classcount/error.hpp"

namespace classcount {

inline constexpr const char* kRngAlgorithm = "mt19937_64/splitmix64 v1";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream `index` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u = 0.0;
    do u = uniform();
    while (u == 0.0);
    return u;
  }

  /// Poisson(lambda) by inversion, splitting large means into pieces of at most 16.
  std::int64_t poisson(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("poisson: lambda must be finite and >= 0");
    std::int64_t total = 0;
    while (lambda > 16.0) {
      total += poisson_small(16.0);
      lambda -= 16.0;
    }
    return total + poisson_small(lambda);
  }

  /// Poisson(lambda) conditioned on being positive.
  std::int64_t truncated_poisson(double lambda) {
    if (!(lambda > 0.0)) throw DomainError("truncated_poisson: lambda must be > 0");
    if (lambda > 16.0) {
      std::int64_t x = 0;
      while (x == 0) x = poisson(lambda);
      return x;
    }
    // Inversion on the truncated law: f(1) = lambda / (e^lambda - 1), f(x + 1) = f(x) lambda / (x + 1).
    const double u = uniform();
    double p = lambda / std::expm1(lambda);
    double cdf = p;
    std::int64_t x = 1;
    while (u >= cdf && x < 10'000) {
      p *= lambda / static_cast<double>(x + 1);
      cdf += p;
      ++x;
      if (p == 0.0) break;
    }
    return x;
  }

  /// Index j with probability weights[j] / sum(weights).
  std::size_t categorical(std::span<const double> cumulative) {
    const double u = uniform() * cumulative.back();
    std::size_t lo = 0;
    std::size_t hi = cumulative.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (u < cumulative[mid])
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  }

  std::int64_t binomial(std::int64_t trials, double p) {
    std::int64_t k = 0;
    for (std::int64_t i = 0; i < trials; ++i) k += uniform() < p ? 1 : 0;
    return k;
  }

 private:
  std::int64_t poisson_small(double lambda) {
    if (lambda == 0.0) return 0;
    const double u = uniform();
    double p = std::exp(-lambda);
    double cdf = p;
    std::int64_t x = 0;
    while (u >= cdf && x < 1'000) {
      ++x;
      p *= lambda / static_cast<double>(x);
      cdf += p;
    }
    return x;
  }

  std::mt19937_64 engine_;
};

}  // namespace classcount
