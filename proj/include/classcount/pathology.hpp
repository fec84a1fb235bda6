#pragma once

// Contamination family Q_s = (1 - pi) Q + pi delta(eta) and the distances between mixtures.
// With pi = s and eta = s^2 the odds blow up as s -> 0 while f_{Q_s} -> f_Q in total variation.

#include <algorithm>
#include <cmath>
#include <vector>

#include "classcount/error.hpp"
#include "classcount/mixture.hpp"

namespace classcount {

inline MixingDistribution contaminate(const MixingDistribution& q, double pi, double eta) {
  if (!(pi >= 0.0 && pi <= 1.0)) throw DomainError("contaminate: pi must be in [0, 1]");
  if (!(eta > 0.0)) throw DomainError("contaminate: eta must be > 0");
  std::vector<double> atoms(q.atoms().begin(), q.atoms().end());
  std::vector<double> weights(q.weights().begin(), q.weights().end());
  for (double& w : weights) w *= 1.0 - pi;
  atoms.push_back(eta);
  weights.push_back(pi);
  return {atoms, weights};
}

/// Certified enclosure of an infinite sum.
struct DistanceInterval {
  double lower = 0.0;
  double upper = 0.0;
  int truncation = 0;
};

inline constexpr double kDistanceTailTol = 1e-10;

/// Smallest T at which both tails are certified below 1e-10.
inline int common_truncation(const MixingDistribution& f, const MixingDistribution& g) {
  return std::max(truncation_point(f, kDistanceTailTol), truncation_point(g, kDistanceTailTol));
}

/// sum_x |f_F(x) - f_G(x)|; the tail beyond T adds at most the two tail masses.
inline DistanceInterval total_variation(const MixingDistribution& f, const MixingDistribution& g, int truncation = 0) {
  const int t = truncation > 0 ? truncation : common_truncation(f, g);
  const auto pf = mixture_pmf_vector(f, t);
  const auto pg = mixture_pmf_vector(g, t);
  double sum = 0.0;
  for (int x = 0; x < t; ++x) sum += std::abs(pf[x] - pg[x]);
  return {sum, sum + mixture_tail_bound(f, t) + mixture_tail_bound(g, t), t};
}

/// {sum_x (f_F(x)^{1/2} - f_G(x)^{1/2})^2}^{1/2}; tail terms are bounded by f + g.
inline DistanceInterval hellinger(const MixingDistribution& f, const MixingDistribution& g, int truncation = 0) {
  const int t = truncation > 0 ? truncation : common_truncation(f, g);
  const auto pf = mixture_pmf_vector(f, t);
  const auto pg = mixture_pmf_vector(g, t);
  double sum = 0.0;
  for (int x = 0; x < t; ++x) {
    const double d = std::sqrt(pf[x]) - std::sqrt(pg[x]);
    sum += d * d;
  }
  return {std::sqrt(sum), std::sqrt(sum + mixture_tail_bound(f, t) + mixture_tail_bound(g, t)), t};
}

struct ContaminationRow {
  double s = 0.0;
  double pi = 0.0;
  double eta = 0.0;
  double theta_mixed = 0.0;        // odds(Q_s)
  double theta_closed_form = 0.0;  // (1 - pi) odds(Q) + pi / (e^eta - 1)
  double tv_bound = 0.0;           // 2 pi
  DistanceInterval tv;
  DistanceInterval hellinger;
};

struct ContaminationTrace {
  MixingDistribution base;
  std::vector<ContaminationRow> rows;
};

/// One row per s with pi = s and eta = s^2. s must lie in (0, 1) and decrease.
inline ContaminationTrace blowup_trace(const MixingDistribution& q, const std::vector<double>& s_values) {
  for (std::size_t i = 0; i < s_values.size(); ++i) {
    if (!(s_values[i] > 0.0 && s_values[i] < 1.0)) throw DomainError("blowup_trace: s must be in (0, 1)");
    if (i > 0 && !(s_values[i] < s_values[i - 1])) throw DomainError("blowup_trace: s values must decrease");
  }
  ContaminationTrace trace{q, {}};
  const double base_odds = odds(q);
  for (double s : s_values) {
    ContaminationRow row;
    row.s = s;
    row.pi = s;
    row.eta = s * s;
    const auto qs = contaminate(q, row.pi, row.eta);
    row.theta_mixed = odds(qs);
    row.theta_closed_form = (1.0 - row.pi) * base_odds + row.pi * undetected_odds(row.eta);
    row.tv_bound = 2.0 * row.pi;
    row.tv = total_variation(qs, q);
    row.hellinger = hellinger(qs, q);
    trace.rows.push_back(row);
  }
  return trace;
}

}  // namespace classcount
