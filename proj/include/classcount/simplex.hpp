#pragma once

// Dense two-phase tableau simplex with Bland's rule.
//
//   minimize c'x  subject to  a_i'x (<=, >=, =) b_i,  x >= 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "classcount/error.hpp"
#include "classcount/linalg.hpp"

namespace classcount {

enum class Relation { less_equal, greater_equal, equal };

struct LinearProgram {
  std::vector<double> c;
  linalg::Matrix a;  // rows x c.size()
  std::vector<double> b;
  std::vector<Relation> rel;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> slack;  // b_i - a_i'x, sign as written
  int iterations = 0;
};

namespace detail {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : t_(rows + 1, cols + 1), basis_(rows) {}

  double& at(std::size_t r, std::size_t c) { return t_(r, c); }
  double at(std::size_t r, std::size_t c) const { return t_(r, c); }
  double rhs(std::size_t r) const { return t_(r, t_.cols() - 1); }
  std::size_t rows() const { return t_.rows() - 1; }
  std::size_t cols() const { return t_.cols() - 1; }
  std::vector<std::size_t>& basis() { return basis_; }
  double cost(std::size_t c) const { return t_(rows(), c); }
  double& cost_ref(std::size_t c) { return t_(rows(), c); }

  void pivot(std::size_t pr, std::size_t pc) {
    const double p = t_(pr, pc);
    for (std::size_t c = 0; c < t_.cols(); ++c) t_(pr, c) /= p;
    for (std::size_t r = 0; r < t_.rows(); ++r) {
      if (r == pr) continue;
      const double f = t_(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < t_.cols(); ++c) t_(r, c) -= f * t_(pr, c);
    }
    basis_[pr] = pc;
  }

  // Runs Bland's rule over columns [0, active). Returns optimal, unbounded or iteration_limit.
  LpStatus optimize(std::size_t active, int& iterations, int max_iterations) {
    constexpr double kCostTol = 1e-11;
    constexpr double kPivotTol = 1e-11;
    while (true) {
      std::size_t enter = active;
      for (std::size_t c = 0; c < active; ++c) {
        if (cost(c) < -kCostTol) {
          enter = c;
          break;
        }
      }
      if (enter == active) return LpStatus::optimal;
      if (iterations >= max_iterations) return LpStatus::iteration_limit;
      std::size_t leave = rows();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows(); ++r) {
        const double v = t_(r, enter);
        if (v <= kPivotTol) continue;
        const double ratio = rhs(r) / v;
        if (ratio < best - 1e-14 || (std::abs(ratio - best) <= 1e-14 && basis_[r] < basis_[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave == rows()) return LpStatus::unbounded;
      pivot(leave, enter);
      ++iterations;
    }
  }

 private:
  linalg::Matrix t_;
  std::vector<std::size_t> basis_;
};

}  // namespace detail

inline LpResult solve_simplex(const LinearProgram& lp, int max_iterations = 100000) {
  const std::size_t m = lp.b.size();
  const std::size_t n = lp.c.size();
  if (lp.a.rows() != m || lp.rel.size() != m || (m > 0 && lp.a.cols() != n))
    throw DomainError("solve_simplex: inconsistent dimensions");

  // Columns: x (n), one slack or surplus per inequality, one artificial per >= or = row.
  std::vector<double> sign(m, 1.0);
  std::vector<Relation> rel(lp.rel);
  for (std::size_t i = 0; i < m; ++i) {
    if (lp.b[i] < 0.0) {
      sign[i] = -1.0;
      if (rel[i] == Relation::less_equal)
        rel[i] = Relation::greater_equal;
      else if (rel[i] == Relation::greater_equal)
        rel[i] = Relation::less_equal;
    }
  }
  std::size_t n_slack = 0;
  std::size_t n_art = 0;
  for (auto r : rel) {
    if (r != Relation::equal) ++n_slack;
    if (r != Relation::less_equal) ++n_art;
  }
  const std::size_t art0 = n + n_slack;
  const std::size_t total = art0 + n_art;
  detail::Tableau t(m, total);

  std::size_t s = n;
  std::size_t a = art0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) t.at(i, j) = sign[i] * lp.a(i, j);
    t.at(i, total) = sign[i] * lp.b[i];
    if (rel[i] == Relation::less_equal) {
      t.at(i, s) = 1.0;
      t.basis()[i] = s++;
    } else {
      if (rel[i] == Relation::greater_equal) t.at(i, s++) = -1.0;
      t.at(i, a) = 1.0;
      t.basis()[i] = a++;
    }
  }

  const detail::Tableau initial = t;

  LpResult out;
  // Phase 1: minimize the sum of artificials, written in terms of the nonbasic columns.
  if (n_art > 0) {
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis()[i] < art0) continue;
      for (std::size_t c = 0; c <= total; ++c) t.cost_ref(c) -= t.at(i, c);
      t.cost_ref(t.basis()[i]) = 0.0;
    }
    for (std::size_t c = art0; c < total; ++c) t.cost_ref(c) = 0.0;
    auto st = t.optimize(total, out.iterations, max_iterations);
    if (st == LpStatus::iteration_limit) {
      out.status = st;
      return out;
    }
    double scale = 1.0;
    for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::abs(lp.b[i]));
    if (-t.cost(total) > 1e-9 * scale) {
      out.status = LpStatus::infeasible;
      return out;
    }
    // Drive artificials out of the basis where possible; rows that cannot pivot are redundant.
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis()[i] < art0) continue;
      for (std::size_t c = 0; c < art0; ++c) {
        if (std::abs(t.at(i, c)) > 1e-9) {
          t.pivot(i, c);
          break;
        }
      }
    }
  }

  // Phase 2 costs: c_j minus c_B B^{-1} a_j, over the non-artificial columns.
  for (std::size_t c = 0; c <= total; ++c) t.cost_ref(c) = c < n ? lp.c[c] : 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t bc = t.basis()[i];
    const double cb = bc < n ? lp.c[bc] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t c = 0; c <= total; ++c) t.cost_ref(c) -= cb * t.at(i, c);
  }
  // Artificials left basic sit in redundant rows at level zero; keep them out of pricing.
  for (std::size_t c = art0; c < total; ++c) t.cost_ref(c) = 0.0;
  out.status = t.optimize(art0, out.iterations, max_iterations);
  if (out.status != LpStatus::optimal) return out;

  // Basic levels from the original rows rather than the accumulated tableau.
  std::vector<double> level(m);
  for (std::size_t i = 0; i < m; ++i) level[i] = t.rhs(i);
  if (m > 0) {
    linalg::Matrix basis(m, m);
    std::vector<double> rhs(m);
    for (std::size_t i = 0; i < m; ++i) {
      rhs[i] = initial.rhs(i);
      for (std::size_t k = 0; k < m; ++k) basis(i, k) = initial.at(i, t.basis()[k]);
    }
    try {
      level = linalg::solve(basis, rhs);
    } catch (const NumericalError&) {
      // keep the tableau levels
    }
  }
  out.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (t.basis()[i] < n) out.x[t.basis()[i]] = std::max(0.0, level[i]);
  out.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) out.objective += lp.c[j] * out.x[j];
  out.slack.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    double ax = 0.0;
    for (std::size_t j = 0; j < n; ++j) ax += lp.a(i, j) * out.x[j];
    out.slack[i] = lp.b[i] - ax;
  }
  return out;
}

}  // namespace classcount
