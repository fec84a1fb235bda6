#pragma once

// Zero-truncated Poisson mixtures f_Q(x) = sum_j pi_j f_{xi_j}(x) and the odds functional.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "classcount/error.hpp"
#include "classcount/frequency_data.hpp"

namespace classcount {

/// log(e^lambda - 1), stable for tiny and large lambda.
inline double log_expm1(double lambda) {
  return lambda > 30.0 ? lambda + std::log1p(-std::exp(-lambda)) : std::log(std::expm1(lambda));
}

/// log f_lambda(x) = x log(lambda) - log(x!) - log(e^lambda - 1).
inline double log_truncated_poisson_pmf(double lambda, int x) {
  return x * std::log(lambda) - std::lgamma(x + 1.0) - log_expm1(lambda);
}

inline double truncated_poisson_pmf(double lambda, int x) {
  if (!(lambda > 0.0)) throw DomainError("truncated_poisson_pmf: lambda must be > 0");
  if (x < 1) return 0.0;
  return std::exp(log_truncated_poisson_pmf(lambda, x));
}

/// (e^lambda - 1)^{-1}: the odds that a Poisson(lambda) class goes undetected.
inline double undetected_odds(double lambda) { return 1.0 / std::expm1(lambda); }

/// Upper bound on P(X > t) for X zero-truncated Poisson(lambda), via the Chernoff bound
/// P(Y >= t + 1) <= e^{-lambda} (e lambda / (t + 1))^{t + 1} on the untruncated Y.
inline double truncated_poisson_tail_bound(double lambda, int t) {
  const double k = t + 1.0;
  if (k <= lambda) return 1.0;
  const double log_bound = -lambda + k * (1.0 + std::log(lambda / k)) - std::log(-std::expm1(-lambda));
  return std::min(1.0, std::exp(log_bound));
}

/// Finite discrete measure on (0, inf): strictly increasing atoms with nonnegative weights.
///
/// Construction sorts atoms, merges exact duplicates and drops weights below 1e-12.
/// The mass is usually 1, but unnormalized measures are representable.
class MixingDistribution {
 public:
  static constexpr double kPruneWeight = 1e-12;

  MixingDistribution() = default;

  MixingDistribution(std::vector<double> atoms, std::vector<double> weights) {
    if (atoms.size() != weights.size())
      throw DomainError("MixingDistribution: atoms and weights differ in length");
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(atoms.size());
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      if (!(atoms[j] > 0.0) || !std::isfinite(atoms[j]))
        throw DomainError("MixingDistribution: atoms must be finite and > 0");
      if (!(weights[j] >= 0.0) || !std::isfinite(weights[j]))
        throw DomainError("MixingDistribution: weights must be finite and >= 0");
      pairs.emplace_back(atoms[j], weights[j]);
    }
    std::sort(pairs.begin(), pairs.end());
    for (const auto& [a, w] : pairs) {
      if (!atoms_.empty() && atoms_.back() == a) {
        weights_.back() += w;
        continue;
      }
      atoms_.push_back(a);
      weights_.push_back(w);
    }
    std::size_t k = 0;
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
      if (weights_[j] < kPruneWeight) continue;
      atoms_[k] = atoms_[j];
      weights_[k] = weights_[j];
      ++k;
    }
    atoms_.resize(k);
    weights_.resize(k);
  }

  /// delta(lambda).
  static MixingDistribution point(double lambda) { return {{lambda}, {1.0}}; }

  std::span<const double> atoms() const noexcept { return atoms_; }
  std::span<const double> weights() const noexcept { return weights_; }

  /// Number of support points.
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }

  double mass() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

  MixingDistribution normalized() const {
    const double m = mass();
    if (!(m > 0.0)) throw DomainError("cannot normalize a zero measure");
    std::vector<double> w(weights_);
    for (auto& v : w) v /= m;
    return {atoms_, w};
  }

 private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
};

inline double mixture_pmf(const MixingDistribution& q, int x) {
  if (x < 1) return 0.0;
  double f = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) f += q.weights()[j] * truncated_poisson_pmf(q.atoms()[j], x);
  return f;
}

/// Dense pmf over x = 1..x_max (element i is f_Q(i + 1)).
inline std::vector<double> mixture_pmf_vector(const MixingDistribution& q, int x_max) {
  std::vector<double> p(static_cast<std::size_t>(std::max(x_max, 0)), 0.0);
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double lambda = q.atoms()[j];
    const double w = q.weights()[j];
    for (int x = 1; x <= x_max; ++x) p[x - 1] += w * std::exp(log_truncated_poisson_pmf(lambda, x));
  }
  return p;
}

/// F_Q(x) = sum_{i <= x} f_Q(i).
inline double mixture_cdf(const MixingDistribution& q, int x) {
  double f = 0.0;
  for (int i = 1; i <= x; ++i) f += mixture_pmf(q, i);
  return f;
}

/// Certified bound on 1 - F_Q(t) for a normalized Q.
inline double mixture_tail_bound(const MixingDistribution& q, int t) {
  double b = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) b += q.weights()[j] * truncated_poisson_tail_bound(q.atoms()[j], t);
  return std::min(1.0, b);
}

/// Smallest t with mixture_tail_bound(q, t) < tol.
inline int truncation_point(const MixingDistribution& q, double tol) {
  double largest = 0.0;
  for (auto a : q.atoms()) largest = std::max(largest, a);
  int t = std::max(1, static_cast<int>(std::ceil(largest)));
  while (mixture_tail_bound(q, t) >= tol) t = t < 64 ? t + 1 : t + t / 8;
  return t;
}

/// theta = integral (e^lambda - 1)^{-1} dQ(lambda).
inline double odds(const MixingDistribution& q) {
  double theta = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) theta += q.weights()[j] * undetected_odds(q.atoms()[j]);
  return theta;
}

/// Population mixing distribution P -> conditional Q: weights proportional to (1 - e^{-lambda}) dP.
inline MixingDistribution kappa(const MixingDistribution& p) {
  std::vector<double> w(p.weights().begin(), p.weights().end());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] *= -std::expm1(-p.atoms()[j]);
  return MixingDistribution({p.atoms().begin(), p.atoms().end()}, w).normalized();
}

/// Inverse of kappa: weights proportional to dQ / (1 - e^{-lambda}).
inline MixingDistribution kappa_inverse(const MixingDistribution& q) {
  std::vector<double> w(q.weights().begin(), q.weights().end());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] /= -std::expm1(-q.atoms()[j]);
  return MixingDistribution({q.atoms().begin(), q.atoms().end()}, w).normalized();
}

/// Probability that a class drawn from P is never observed: g_P(0) = integral e^{-lambda} dP.
inline double undetected_probability(const MixingDistribution& p) {
  double g0 = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) g0 += p.weights()[j] * std::exp(-p.atoms()[j]);
  return g0;
}

/// Conditional log-likelihood sum_x n_x log f_Q(x).
inline double log_likelihood(const MixingDistribution& q, const FrequencyData& d) {
  double ll = 0.0;
  for (const auto& [x, nx] : d.counts()) ll += static_cast<double>(nx) * std::log(mixture_pmf(q, x));
  return ll;
}

/// Directional derivative of the log-likelihood towards delta(lambda):
/// D(lambda; Q) = sum_x n_x f_lambda(x) / f_Q(x) - n. Nonpositive everywhere at the NPMLE.
inline double gradient_fn(double lambda, const MixingDistribution& q, const FrequencyData& d) {
  double s = 0.0;
  for (const auto& [x, nx] : d.counts())
    s += static_cast<double>(nx) * truncated_poisson_pmf(lambda, x) / mixture_pmf(q, x);
  return s - static_cast<double>(d.n());
}

/// Closed-form summaries of f_Q: f_Q(1), s_1 = E X and s_2 = E X^2.
struct PmfSummary {
  double f1 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
};

inline PmfSummary summarize(const MixingDistribution& q) {
  PmfSummary s;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double l = q.atoms()[j];
    const double w = q.weights()[j];
    const double detect = -std::expm1(-l);
    s.f1 += w * truncated_poisson_pmf(l, 1);
    s.s1 += w * l / detect;
    s.s2 += w * (l + l * l) / detect;
  }
  return s;
}

inline PmfSummary summarize(std::span<const double> pmf) {
  return {pmf.empty() ? 0.0 : pmf[0], s_moment(pmf, 1), s_moment(pmf, 2)};
}

inline PmfSummary summarize(const FrequencyData& d) {
  const double n = static_cast<double>(d.n());
  PmfSummary s;
  s.f1 = static_cast<double>(d.count(1)) / n;
  for (const auto& [x, nx] : d.counts()) {
    s.s1 += static_cast<double>(x) * static_cast<double>(nx) / n;
    s.s2 += static_cast<double>(x) * x * static_cast<double>(nx) / n;
  }
  return s;
}

/// Population model (c, P): c classes with Poisson rates drawn from P.
struct PopulationModel {
  std::int64_t c = 1;
  MixingDistribution p;

  /// 1 - g_P(0).
  double detection_probability() const { return 1.0 - undetected_probability(p); }
  /// g_P(0) / (1 - g_P(0)).
  double odds() const { return undetected_probability(p) / detection_probability(); }
};

}  // namespace classcount
