#pragma once

// Moment-matrix lower bounds to the odds.
//
// With mu(x) = x! f_Q(x) the moments of dPhi = (e^lambda - 1)^{-1} dQ, mu(0) is the odds
// theta itself and is never observed. For Gamma_k = (mu(i + j))_{i,j=1..k} positive
// definite and a_k = (mu(1), ..., mu(k)), theta_k = a_k' Gamma_k^{-1} a_k is a lower bound
// to theta that increases strictly in k and reaches theta at k = number of atoms of Q.
//
// All matrix work happens on the rescaled sequence mu(x) / r^x, which leaves every theta_k
// unchanged and keeps the Hankel matrices well scaled.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "classcount/error.hpp"
#include "classcount/frequency_data.hpp"
#include "classcount/linalg.hpp"
#include "classcount/mixture.hpp"

namespace classcount {

inline constexpr int kDefaultKCap = 8;
inline constexpr double kPivotFloor = 1e-10;

/// mu(1)..mu(2K); mu(0) is the unknown odds and is never stored.
struct MomentVector {
  enum class Source { empirical, model };

  std::vector<double> mu;  // mu[x - 1] = mu(x)
  Source source = Source::empirical;

  /// Largest k with 2k moments available.
  int max_order() const noexcept { return static_cast<int>(mu.size() / 2); }
  double at(int x) const { return mu[static_cast<std::size_t>(x - 1)]; }

  /// Preconditioning scale r = max(1, mu(2) / mu(1)).
  double scale() const {
    if (mu.size() < 2 || !(mu[0] > 0.0)) return 1.0;
    return std::max(1.0, mu[1] / mu[0]);
  }

  /// mu(x) / r^x for x = 1..2K.
  std::vector<double> scaled() const {
    const double log_r = std::log(scale());
    std::vector<double> m(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) m[i] = mu[i] * std::exp(-(static_cast<double>(i) + 1.0) * log_r);
    return m;
  }
};

/// x! pmf(x) for x = 1..2k_cap; pmf[i] is the probability of x = i + 1.
inline MomentVector moments_from_pmf(std::span<const double> pmf, int k_cap, MomentVector::Source source) {
  if (k_cap < 1) throw DomainError("k_cap must be >= 1");
  if (2 * k_cap > 170) throw DomainError("k_cap too large for double-precision factorials");
  MomentVector m{std::vector<double>(static_cast<std::size_t>(2 * k_cap), 0.0), source};
  for (int x = 1; x <= 2 * k_cap && x <= static_cast<int>(pmf.size()); ++x)
    m.mu[x - 1] = factorial(x) * pmf[x - 1];
  return m;
}

inline MomentVector empirical_moments(const FrequencyData& d, int k_cap) {
  if (k_cap < 1) throw DomainError("k_cap must be >= 1");
  MomentVector m{std::vector<double>(static_cast<std::size_t>(2 * k_cap), 0.0), MomentVector::Source::empirical};
  for (int x = 1; x <= 2 * k_cap; ++x) m.mu[x - 1] = empirical_moment(d, x);
  return m;
}

/// mu(x) = x! f_Q(x), computed per atom in log space.
inline MomentVector model_moments(const MixingDistribution& q, int k_cap) {
  if (k_cap < 1) throw DomainError("k_cap must be >= 1");
  MomentVector m{std::vector<double>(static_cast<std::size_t>(2 * k_cap), 0.0), MomentVector::Source::model};
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double l = q.atoms()[j];
    const double log_phi = std::log(q.weights()[j]) - log_expm1(l);
    for (int x = 1; x <= 2 * k_cap; ++x) m.mu[x - 1] += std::exp(log_phi + x * std::log(l));
  }
  return m;
}

namespace detail {

// Gamma_K on the scaled sequence: entry (i, j) is m(i + j + 2) with 0-based i, j.
inline linalg::Ldlt factor_gamma(std::span<const double> scaled, int order) {
  return linalg::ldlt(linalg::hankel(scaled, static_cast<std::size_t>(order), 1), kPivotFloor);
}

inline double quadratic_form(const linalg::Ldlt& f, std::span<const double> scaled, int k) {
  const auto u = f.solve(scaled, static_cast<std::size_t>(k));
  double theta = 0.0;
  for (int i = 0; i < k; ++i) theta += scaled[i] * u[i];
  return theta;
}

}  // namespace detail

/// Largest k <= k_cap with Gamma_1..Gamma_k positive definite; 0 when even mu(2) fails.
inline int chi_hat(const MomentVector& m, int k_cap) {
  if (k_cap < 1) throw DomainError("chi_hat: k_cap must be >= 1");
  const int order = std::min(k_cap, m.max_order());
  if (order < 1) return 0;
  const auto scaled = m.scaled();
  return static_cast<int>(detail::factor_gamma(scaled, order).valid);
}

/// theta_k = a_k' Gamma_k^{-1} a_k. Throws LadderEnds when Gamma_k is not positive definite.
inline double theta_k(const MomentVector& m, int k) {
  if (k < 1) throw DomainError("theta_k: k must be >= 1");
  if (k > m.max_order()) throw DomainError("theta_k: needs 2k moments, have " + std::to_string(m.mu.size()));
  const auto scaled = m.scaled();
  const auto f = detail::factor_gamma(scaled, k);
  if (static_cast<int>(f.valid) < k) throw LadderEnds(k, static_cast<int>(f.valid));
  return detail::quadratic_form(f, scaled, k);
}

/// The sequence theta_1 < ... < theta_chi with both determinant sequences.
struct HankelLadder {
  std::vector<double> theta;             // direct a' Gamma^{-1} a, index k - 1
  std::vector<double> theta_recurrence;  // theta_{k} = theta_{k-1} + |Hbar_{k-1}|^2 / (|Gamma_{k-1}| |Gamma_k|)
  std::vector<double> gamma_dets;        // |Gamma_1|..|Gamma_m| on the scaled sequence
  std::vector<double> hbar_dets;         // |Hbar_0|..|Hbar_{m-1}|, Hbar_k = (m(i + j + 1))_{i,j=0..k}
  int chi_hat = 0;
  double scale = 1.0;
  double max_recurrence_error = 0.0;     // largest relative gap between the two routes

  bool recurrence_holds(double rel_tol = 1e-8) const { return max_recurrence_error <= rel_tol; }
};

inline HankelLadder ladder(const MomentVector& m, int k_cap = kDefaultKCap) {
  if (k_cap < 1) throw DomainError("ladder: k_cap must be >= 1");
  HankelLadder out;
  out.scale = m.scale();
  const int order = std::min(k_cap, m.max_order());
  if (order < 1) return out;
  const auto scaled = m.scaled();
  const auto f = detail::factor_gamma(scaled, order);
  out.chi_hat = static_cast<int>(f.valid);

  double previous_theta = 0.0;
  double previous_gamma = 1.0;
  for (int k = 1; k <= out.chi_hat; ++k) {
    const double theta = detail::quadratic_form(f, scaled, k);
    const double gamma = f.determinant(static_cast<std::size_t>(k));
    const double hbar = linalg::determinant(linalg::hankel(scaled, static_cast<std::size_t>(k), 0));
    const double recurrence = previous_theta + hbar * hbar / (previous_gamma * gamma);
    out.theta.push_back(theta);
    out.gamma_dets.push_back(gamma);
    out.hbar_dets.push_back(hbar);
    out.theta_recurrence.push_back(recurrence);
    out.max_recurrence_error = std::max(out.max_recurrence_error, std::abs(recurrence - theta) / std::abs(theta));
    previous_theta = recurrence;
    previous_gamma = gamma;
  }
  return out;
}

inline HankelLadder ladder(const FrequencyData& d, int k_cap = kDefaultKCap) {
  return ladder(empirical_moments(d, k_cap), k_cap);
}

/// k-atom representation Q_k of the moment data (theta_k, mu(1), ..., mu(2k - 1)).
struct QuadratureResult {
  MixingDistribution q;             // Q_k = (e^lambda - 1) dPhi_k, not renormalized
  std::vector<double> phi_weights;  // Phi_k masses at the atoms; they sum to theta_k
  double mass = 0.0;                // Z = total mass of Q_k
};

/// Gauss quadrature from the moment sequence (theta_k, mu(1), ..., mu(2k - 1)) via the
/// Cholesky factor of its Hankel matrix (Golub-Welsch). Atoms must land in (0, inf).
inline QuadratureResult quadrature_representation(const MomentVector& m, int k, double theta) {
  if (k < 1 || 2 * k > static_cast<int>(m.mu.size()) + 1)
    throw DomainError("quadrature_representation: need mu(1)..mu(2k-1)");
  if (!(theta > 0.0)) throw DomainError("quadrature_representation: theta_k must be > 0");
  const double r = m.scale();
  const auto scaled = m.scaled();
  // c[i] is the i-th moment of the scaled measure, c[0] = theta.
  std::vector<double> c(static_cast<std::size_t>(2 * k));
  c[0] = theta;
  for (int i = 1; i < 2 * k; ++i) c[i] = scaled[i - 1];

  // Upper Cholesky rows 0..k-1 of the (k+1)x(k+1) Hankel matrix; column k needs c[2k-1] at most.
  linalg::Matrix up(static_cast<std::size_t>(k), static_cast<std::size_t>(k + 1));
  for (int i = 0; i < k; ++i) {
    double diag = c[2 * i];
    for (int l = 0; l < i; ++l) diag -= up(l, i) * up(l, i);
    if (!(diag > kPivotFloor * c[2 * i]))
      throw NumericalError("quadrature_representation: moment matrix is not positive definite");
    up(i, i) = std::sqrt(diag);
    for (int j = i + 1; j <= k; ++j) {
      double s = c[i + j];
      for (int l = 0; l < i; ++l) s -= up(l, i) * up(l, j);
      up(i, j) = s / up(i, i);
    }
  }

  std::vector<double> alpha(static_cast<std::size_t>(k));
  std::vector<double> beta(static_cast<std::size_t>(std::max(k - 1, 0)));
  for (int j = 0; j < k; ++j) {
    alpha[j] = up(j, j + 1) / up(j, j) - (j > 0 ? up(j - 1, j) / up(j - 1, j - 1) : 0.0);
    if (j > 0) beta[j - 1] = up(j, j) / up(j - 1, j - 1);
  }
  const auto eig = linalg::tridiagonal_eigen(alpha, beta);

  std::vector<double> atoms(static_cast<std::size_t>(k));
  std::vector<double> phi(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    if (!(eig.values[j] > 0.0)) throw NumericalError("quadrature node outside (0, inf)");
    atoms[j] = eig.values[j] * r;
    phi[j] = theta * eig.vectors(0, j) * eig.vectors(0, j);
  }
  std::vector<double> q_weights(phi);
  double mass = 0.0;
  for (int j = 0; j < k; ++j) {
    q_weights[j] *= std::expm1(atoms[j]);
    mass += q_weights[j];
  }
  return {MixingDistribution(atoms, q_weights), phi, mass};
}

/// Delta-method standard error of theta_k at the empirical pmf.
///
/// d theta = 2 u' da - u' dGamma u with u = Gamma^{-1} a, chained through mu(x) = x! f(x),
/// combined with the multinomial covariance (diag(f) - f f') / n.
inline std::vector<double> theta_k_gradient(std::span<const double> pmf, int k) {
  const auto m = moments_from_pmf(pmf, k, MomentVector::Source::empirical);
  const auto scaled = m.scaled();
  const auto f = detail::factor_gamma(scaled, k);
  if (static_cast<int>(f.valid) < k) throw LadderEnds(k, static_cast<int>(f.valid));
  const auto u = f.solve(scaled, static_cast<std::size_t>(k));
  // Gradient w.r.t. scaled moments m(1)..m(2k).
  std::vector<double> g(static_cast<std::size_t>(2 * k), 0.0);
  for (int i = 0; i < k; ++i) g[i] += 2.0 * u[i];
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) g[i + j + 1] -= u[i] * u[j];
  const double log_r = std::log(m.scale());
  for (int x = 1; x <= 2 * k; ++x) g[x - 1] *= factorial(x) * std::exp(-x * log_r);
  return g;
}

inline double delta_se(const FrequencyData& d, int k) {
  auto pmf = d.pmf();
  pmf.resize(std::max<std::size_t>(pmf.size(), static_cast<std::size_t>(2 * k)), 0.0);
  const auto g = theta_k_gradient(pmf, k);
  double quad = 0.0;
  double mean = 0.0;
  for (int x = 1; x <= 2 * k; ++x) {
    quad += g[x - 1] * g[x - 1] * pmf[x - 1];
    mean += g[x - 1] * pmf[x - 1];
  }
  const double var = (quad - mean * mean) / static_cast<double>(d.n());
  return std::sqrt(std::max(var, 0.0));
}

}  // namespace classcount
