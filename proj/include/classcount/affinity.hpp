#pragma once

// Testing affinity between binomial(c, rho) and Poisson(c rho): a lower bound, less alpha,
// on the chance that an honest upper confidence limit for c is infinite.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "classcount/error.hpp"

namespace classcount {

inline constexpr std::int64_t kMaxAffinityClasses = 1'000'000;

/// A(c, rho) = sum_{x=0}^{c} min{binomial(c, rho)(x), Poisson(c rho)(x)}.
inline double affinity(std::int64_t c, double rho) {
  if (c < 1 || c > kMaxAffinityClasses) throw DomainError("affinity: c must be in [1, 1e6]");
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("affinity: rho must be in [0, 1]");
  if (rho == 0.0) return 1.0;
  const double dc = static_cast<double>(c);
  const double mean = dc * rho;
  const double log_mean = std::log(mean);
  const double log_c_fact = std::lgamma(dc + 1.0);
  double total = 0.0;
  for (std::int64_t x = 0; x <= c; ++x) {
    const double dx = static_cast<double>(x);
    const double log_x_fact = std::lgamma(dx + 1.0);
    double log_binom = -std::numeric_limits<double>::infinity();
    if (rho == 1.0) {
      if (x == c) log_binom = 0.0;
    } else {
      log_binom = log_c_fact - log_x_fact - std::lgamma(dc - dx + 1.0) + dx * std::log(rho) + (dc - dx) * std::log1p(-rho);
    }
    const double log_pois = -mean + dx * log_mean - log_x_fact;
    total += std::exp(std::min(log_binom, log_pois));
  }
  return std::min(total, 1.0);
}

/// 1 - rho / (2 sqrt(1 - rho)). Undefined at rho = 1.
inline double affinity_floor(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("affinity_floor: rho must be in [0, 1)");
  return 1.0 - rho / (2.0 * std::sqrt(1.0 - rho));
}

/// A(c, rho) - alpha; negative values carry no information.
inline double infinite_ucl_probability_bound(std::int64_t c, double rho, double alpha) {
  return affinity(c, rho) - alpha;
}

struct AffinityResult {
  std::int64_t c = 1;
  double rho = 0.0;
  double affinity = 1.0;
  double floor_bound = 1.0;  // NaN at rho = 1
  double infinite_ucl_lower_bound = 0.0;
};

inline AffinityResult affinity_result(std::int64_t c, double rho, double alpha) {
  AffinityResult r;
  r.c = c;
  r.rho = rho;
  r.affinity = affinity(c, rho);
  r.floor_bound = rho < 1.0 ? affinity_floor(rho) : std::numeric_limits<double>::quiet_NaN();
  r.infinite_ucl_lower_bound = r.affinity - alpha;
  return r;
}

}  // namespace classcount
