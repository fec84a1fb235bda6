#pragma once

// Coverage-style approximations to the odds and the pseudo-MLE map theta -> n (1 + theta).

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "classcount/error.hpp"
#include "classcount/frequency_data.hpp"
#include "classcount/mixture.hpp"

namespace classcount {

/// 1 / (1 - f(1) / s1) - 1.
inline double theta_dr(const PmfSummary& s) {
  if (!(s.s1 > s.f1)) throw UndefinedEstimate("theta_DR undefined: s1 <= f(1)");
  return 1.0 / (1.0 - s.f1 / s.s1) - 1.0;
}

/// (f(1)(s2 - s1) + s1 (1 - f(1))(s1 - f(1))) / (s1 - f(1))^2 - 1.
inline double theta_cl(const PmfSummary& s) {
  const double gap = s.s1 - s.f1;
  if (gap == 0.0) throw UndefinedEstimate("theta_CL undefined: s1 = f(1)");
  return (s.f1 * (s.s2 - s.s1) + s.s1 * (1.0 - s.f1) * gap) / (gap * gap) - 1.0;
}

/// (1 - f(1)) / (1 - f(1) s2 / s1^2) - 1. Can be negative; reported as is.
inline double theta_cb(const PmfSummary& s) {
  const double denom = 1.0 - s.f1 * s.s2 / (s.s1 * s.s1);
  if (denom == 0.0 || !(s.s1 > 0.0)) throw UndefinedEstimate("theta_CB undefined: f(1) s2 = s1^2");
  return (1.0 - s.f1) / denom - 1.0;
}

/// Integer part of n (1 + theta).
///
/// A relative slack of 1e-12 absorbs rounding in theta so that exact integers such as
/// n + n1^2 / (2 n2) are not truncated one below.
inline std::int64_t pseudo_mle(std::int64_t n, double theta) {
  if (!std::isfinite(theta) || theta < 0.0) throw DomainError("pseudo_mle: theta must be finite and >= 0");
  const double c = static_cast<double>(n) * (1.0 + theta);
  return static_cast<std::int64_t>(std::floor(c * (1.0 + 1e-12)));
}

/// Chao's n + n1^2 / (2 n2), floored, in exact integer arithmetic.
inline std::int64_t chao1(const FrequencyData& d) {
  const auto n1 = d.count(1);
  const auto n2 = d.count(2);
  if (n2 == 0) throw UndefinedEstimate("chao1 undefined: n2 = 0");
  return d.n() + (n1 * n1) / (2 * n2);
}

/// Point estimates of the odds and the derived class-count pseudo-MLEs.
struct EstimateSet {
  double theta_dr = NAN;
  double theta_cl = NAN;
  double theta_cb = NAN;
  std::vector<double> theta_ladder;
  std::map<std::string, std::int64_t> c_hats;
  std::vector<std::string> undefined;  // functionals that could not be evaluated, with reasons
};

/// Evaluates the three closed-form functionals, recording failures instead of throwing.
inline EstimateSet classical_estimates(const PmfSummary& s) {
  EstimateSet e;
  auto attempt = [&](const char* name, double (*fn)(const PmfSummary&), double& slot) {
    try {
      slot = fn(s);
    } catch (const UndefinedEstimate& err) {
      e.undefined.push_back(std::string(name) + ": " + err.what());
    }
  };
  attempt("theta_DR", theta_dr, e.theta_dr);
  attempt("theta_CL", theta_cl, e.theta_cl);
  attempt("theta_CB", theta_cb, e.theta_cb);
  return e;
}

}  // namespace classcount
