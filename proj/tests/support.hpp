#pragma once

// Shared datasets and oracles for the test binaries. Oracles here are written from the
// defining formulas and never call into the library code they are used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "classcount.hpp"

namespace classcount::testing {

inline FrequencyData cholera() { return FrequencyData(FrequencyData::Counts{{1, 32}, {2, 16}, {3, 6}, {4, 1}}); }

inline FrequencyData est() {
  return FrequencyData(FrequencyData::Counts{{1, 1434}, {2, 253}, {3, 71}, {4, 33}, {5, 11}, {6, 6}, {7, 2}, {8, 3}, {9, 1},
                        {10, 2}, {11, 2}, {12, 1}, {13, 1}, {14, 1}, {16, 2}, {23, 1}, {27, 1}});
}

/// lambda^x / (x! (e^lambda - 1)), evaluated in long double.
inline long double ztp(long double lambda, int x) {
  long double p = 1.0L / std::expm1(lambda);
  for (int i = 1; i <= x; ++i) p *= lambda / i;
  return p;
}

/// sum_j w_j / (e^{a_j} - 1).
inline double odds_oracle(const std::vector<double>& atoms, const std::vector<double>& weights) {
  long double s = 0.0L;
  for (std::size_t j = 0; j < atoms.size(); ++j) s += weights[j] / std::expm1(static_cast<long double>(atoms[j]));
  return static_cast<double>(s);
}

/// x! f_Q(x) for x = 1..count, i.e. sum_j w_j a_j^x / (e^{a_j} - 1).
inline std::vector<long double> moment_oracle(const std::vector<double>& atoms, const std::vector<double>& weights,
                                              int count) {
  std::vector<long double> mu(static_cast<std::size_t>(count), 0.0L);
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    long double p = weights[j] / std::expm1(static_cast<long double>(atoms[j]));
    for (int x = 1; x <= count; ++x) {
      p *= atoms[j];
      mu[x - 1] += p;
    }
  }
  return mu;
}

/// Determinant by permutation expansion; fine up to 7x7.
inline long double leibniz_det(const std::vector<std::vector<long double>>& a) {
  const auto n = a.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  long double det = 0.0L;
  do {
    int inversions = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (perm[i] > perm[j]) ++inversions;
    long double term = inversions % 2 ? -1.0L : 1.0L;
    for (std::size_t i = 0; i < n; ++i) term *= a[i][perm[i]];
    det += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return det;
}

/// |Gamma_k| from mu(1)..: entry (i, j) = mu(i + j + 2), 0-based.
inline long double gamma_det_oracle(const std::vector<long double>& mu, int k) {
  std::vector<std::vector<long double>> a(static_cast<std::size_t>(k), std::vector<long double>(k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) a[i][j] = mu[static_cast<std::size_t>(i + j + 1)];
  return leibniz_det(a);
}

/// Root of a monotone function on [lo, hi] by bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iterations = 200) {
  double flo = f(lo);
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Maximizer of a unimodal function on [lo, hi] by golden-section search.
inline double golden_max(const std::function<double(double)>& f, double lo, double hi, int iterations = 200) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - g * (hi - lo);
  double d = lo + g * (hi - lo);
  for (int i = 0; i < iterations; ++i) {
    if (f(c) > f(d))
      hi = d;
    else
      lo = c;
    c = hi - g * (hi - lo);
    d = lo + g * (hi - lo);
  }
  return 0.5 * (lo + hi);
}

/// Gauss-Jordan solve with partial pivoting; returns false when singular.
inline bool solve_dense(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
  const auto n = a.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (std::abs(a[p][c]) < 1e-12) return false;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double m = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= m * a[c][k];
      b[r] -= m * b[c];
    }
  }
  x.resize(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return true;
}

inline MomentVector exact_moments(const std::vector<double>& atoms, const std::vector<double>& weights, int k_cap) {
  const auto mu = moment_oracle(atoms, weights, 2 * k_cap);
  MomentVector m;
  m.source = MomentVector::Source::model;
  for (auto v : mu) m.mu.push_back(static_cast<double>(v));
  return m;
}

// Mixtures with j = 1..4 well separated atoms.
inline std::vector<std::pair<std::vector<double>, std::vector<double>>> atom_families() {
  return {
      {{1.3}, {1.0}},
      {{0.5, 2.0}, {0.5, 0.5}},
      {{0.2, 1.1, 3.5}, {0.3, 0.5, 0.2}},
      {{0.15, 0.9, 2.6, 6.0}, {0.25, 0.35, 0.3, 0.1}},
  };
}

struct Row {
  std::vector<double> a;
  double b;
  Relation rel;
};

// Minimum of c'x over the vertices of {rows, x >= 0}, by enumerating every choice of n tight
// constraints. Returns nullopt when no vertex is feasible.
inline std::optional<double> vertex_minimum(const std::vector<double>& c, const std::vector<Row>& rows) {
  const std::size_t n = c.size();
  std::vector<Row> all = rows;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    all.push_back({e, 0.0, Relation::greater_equal});
  }
  const std::size_t m = all.size();
  std::optional<double> best;
  std::vector<bool> pick(m, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n), true);
  do {
    bool equalities_tight = true;
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    for (std::size_t i = 0; i < m; ++i) {
      if (pick[i]) {
        a.push_back(all[i].a);
        b.push_back(all[i].b);
      } else if (all[i].rel == Relation::equal) {
        equalities_tight = false;
      }
    }
    std::vector<double> x;
    if (!equalities_tight || !solve_dense(a, b, x)) continue;
    bool feasible = true;
    for (const auto& r : all) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += r.a[j] * x[j];
      const double tol = 1e-9 * (1.0 + std::abs(r.b));
      if (r.rel == Relation::less_equal && lhs > r.b + tol) feasible = false;
      if (r.rel == Relation::greater_equal && lhs < r.b - tol) feasible = false;
      if (r.rel == Relation::equal && std::abs(lhs - r.b) > tol) feasible = false;
    }
    if (!feasible) continue;
    double obj = 0.0;
    for (std::size_t j = 0; j < n; ++j) obj += c[j] * x[j];
    if (!best || obj < *best) best = obj;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

inline LinearProgram to_lp(const std::vector<double>& c, const std::vector<Row>& rows) {
  LinearProgram lp;
  lp.c = c;
  lp.a = linalg::Matrix(rows.size(), c.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) lp.a(i, j) = rows[i].a[j];
    lp.b.push_back(rows[i].b);
    lp.rel.push_back(rows[i].rel);
  }
  return lp;
}

}  // namespace classcount::testing
