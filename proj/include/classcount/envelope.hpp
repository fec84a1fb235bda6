#pragma once

// One-sided lower confidence limit for the odds: minimize theta(Q) over grid-supported Q
// whose cdf stays within Kolmogorov distance epsilon of the empirical cdf.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "classcount/error.hpp"
#include "classcount/frequency_data.hpp"
#include "classcount/linalg.hpp"
#include "classcount/mixture.hpp"
#include "classcount/random.hpp"
#include "classcount/simplex.hpp"

namespace classcount {

/// max_x |F(x) - G(x)| over a common integer grid.
inline double kolmogorov_distance(std::span<const double> f, std::span<const double> g) {
  if (f.size() != g.size()) throw DomainError("kolmogorov_distance: cdfs on different domains");
  double d = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) d = std::max(d, std::abs(f[i] - g[i]));
  return d;
}

/// Kolmogorov statistic of n uniforms: sup_t |F_n(t) - t|.
///
/// Draws are binned into n cells of width 1/n. Inside a cell, i/n - U_(i) increases and
/// U_(i) - (i - 1)/n decreases with i, so the cell minimum, maximum and count suffice.
inline double kolmogorov_statistic(Rng& rng, std::int64_t n) {
  const auto size = static_cast<std::size_t>(n);
  const double dn = static_cast<double>(n);
  std::vector<std::int64_t> count(size, 0);
  std::vector<double> lo(size, 1.0);
  std::vector<double> hi(size, 0.0);
  for (std::size_t i = 0; i < size; ++i) {
    const double u = rng.uniform();
    const auto c = std::min(size - 1, static_cast<std::size_t>(u * dn));
    ++count[c];
    lo[c] = std::min(lo[c], u);
    hi[c] = std::max(hi[c], u);
  }
  double d = 0.0;
  std::int64_t below = 0;
  for (std::size_t c = 0; c < size; ++c) {
    if (count[c] == 0) continue;
    d = std::max(d, lo[c] - static_cast<double>(below) / dn);
    below += count[c];
    d = std::max(d, static_cast<double>(below) / dn - hi[c]);
  }
  return d;
}

/// Monte Carlo 1 - alpha quantile of the Kolmogorov statistic for sample size n.
/// Replicate r uses stream derive_seed(seed, r); the result does not depend on `threads`.
inline double kolmogorov_quantile(std::int64_t n, double alpha, int reps, std::uint64_t seed, int threads = 1) {
  if (n < 1) throw DomainError("kolmogorov_quantile: n must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("kolmogorov_quantile: alpha must be in (0, 1)");
  if (reps < 1) throw DomainError("kolmogorov_quantile: reps must be >= 1");
  std::vector<double> stats(static_cast<std::size_t>(reps));
  auto work = [&](int first, int stride) {
    for (int r = first; r < reps; r += stride) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
      stats[static_cast<std::size_t>(r)] = kolmogorov_statistic(rng, n);
    }
  };
  threads = std::max(1, std::min(threads, reps));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  std::sort(stats.begin(), stats.end());
  const double h = (static_cast<double>(reps) - 1.0) * (1.0 - alpha);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, stats.size() - 1);
  return stats[lo] + (h - static_cast<double>(lo)) * (stats[hi] - stats[lo]);
}

struct EnvelopeConfig {
  int grid_size = 400;
  double grid_lo = 1e-4;
  double grid_hi = 0.0;  // 0 selects x_max + 10 sqrt(x_max)
  double alpha = 0.05;
  int reps = 100000;
  std::uint64_t seed = 20260101;
  int threads = 1;
};

/// Log-spaced grid on [lo, hi].
inline std::vector<double> envelope_grid(const FrequencyData& d, const EnvelopeConfig& cfg) {
  if (cfg.grid_size < 1) throw DomainError("envelope grid needs at least one atom");
  const double hi = cfg.grid_hi > 0.0 ? cfg.grid_hi : d.x_max() + 10.0 * std::sqrt(static_cast<double>(d.x_max()));
  if (!(cfg.grid_lo > 0.0) || !(hi > cfg.grid_lo)) throw DomainError("envelope grid range must satisfy 0 < lo < hi");
  std::vector<double> g(static_cast<std::size_t>(cfg.grid_size));
  for (int i = 0; i < cfg.grid_size; ++i)
    g[i] = cfg.grid_size == 1 ? cfg.grid_lo
                              : std::exp(std::log(cfg.grid_lo) + (std::log(hi) - std::log(cfg.grid_lo)) * i / (cfg.grid_size - 1));
  return g;
}

struct EnvelopeProblem {
  std::vector<double> grid;
  double epsilon = 0.0;
  std::vector<double> target_cdf;  // F-hat at x = 1..x_max
  std::vector<double> weights;     // (e^xi - 1)^{-1}
  LinearProgram lp;                // rows: upper bands, lower bands, sum-to-one

  std::size_t constraint_count() const { return lp.b.size(); }
};

/// For x = 1..x_max: F-hat(x) - eps <= sum_j pi_j F_{xi_j}(x) <= F-hat(x) + eps; sum pi = 1.
/// Any eps > 0 is accepted; for eps >= 1 the bands are inactive.
inline EnvelopeProblem build_lp(const FrequencyData& d, double epsilon, std::span<const double> grid) {
  if (!(epsilon > 0.0)) throw DomainError("build_lp: epsilon must be > 0");
  if (grid.empty()) throw DomainError("build_lp: empty grid");
  for (std::size_t j = 0; j < grid.size(); ++j)
    if (!(grid[j] > 0.0) || (j > 0 && !(grid[j] > grid[j - 1])))
      throw DomainError("build_lp: grid must be positive and strictly increasing");

  EnvelopeProblem p;
  p.grid.assign(grid.begin(), grid.end());
  p.epsilon = epsilon;
  const int x_max = d.x_max();
  const std::size_t J = grid.size();
  for (int x = 1; x <= x_max; ++x) p.target_cdf.push_back(empirical_cdf(d, x));
  for (double xi : grid) p.weights.push_back(undetected_odds(xi));

  const auto rows = static_cast<std::size_t>(2 * x_max + 1);
  p.lp.c = p.weights;
  p.lp.a = linalg::Matrix(rows, J);
  p.lp.b.assign(rows, 0.0);
  p.lp.rel.assign(rows, Relation::less_equal);
  for (std::size_t j = 0; j < J; ++j) {
    double cdf = 0.0;
    for (int x = 1; x <= x_max; ++x) {
      cdf += truncated_poisson_pmf(grid[j], x);
      p.lp.a(static_cast<std::size_t>(x - 1), j) = cdf;
      p.lp.a(static_cast<std::size_t>(x_max + x - 1), j) = cdf;
    }
    p.lp.a(rows - 1, j) = 1.0;
  }
  for (int x = 1; x <= x_max; ++x) {
    const auto i = static_cast<std::size_t>(x - 1);
    p.lp.b[i] = p.target_cdf[i] + epsilon;
    p.lp.b[x_max + i] = p.target_cdf[i] - epsilon;
    p.lp.rel[x_max + i] = Relation::greater_equal;
  }
  p.lp.b[rows - 1] = 1.0;
  p.lp.rel[rows - 1] = Relation::equal;
  return p;
}

struct EnvelopeSolution {
  bool feasible = false;
  LpStatus status = LpStatus::infeasible;
  double theta_lower = 0.0;
  double epsilon = 0.0;
  std::vector<double> weights;                 // optimal pi on the grid
  std::vector<std::size_t> active_constraints;  // rows with zero slack
  MixingDistribution q;                         // atoms carrying weight

  /// max_x |F_Q(x) - F-hat(x)| at the solution.
  double band_violation(const EnvelopeProblem& p) const {
    double worst = 0.0;
    for (std::size_t x = 0; x < p.target_cdf.size(); ++x) {
      double f = 0.0;
      for (std::size_t j = 0; j < weights.size(); ++j) f += weights[j] * p.lp.a(x, j);
      worst = std::max(worst, std::abs(f - p.target_cdf[x]) - p.epsilon);
    }
    return worst;
  }
};

inline EnvelopeSolution solve_lp(const EnvelopeProblem& p) {
  const auto r = solve_simplex(p.lp);
  EnvelopeSolution s;
  s.status = r.status;
  s.epsilon = p.epsilon;
  if (r.status != LpStatus::optimal) return s;
  s.feasible = true;
  s.weights = r.x;
  s.theta_lower = r.objective;
  for (std::size_t i = 0; i < r.slack.size(); ++i)
    if (std::abs(r.slack[i]) <= 1e-9) s.active_constraints.push_back(i);
  std::vector<double> atoms;
  std::vector<double> w;
  for (std::size_t j = 0; j < r.x.size(); ++j) {
    if (r.x[j] <= 0.0) continue;
    atoms.push_back(p.grid[j]);
    w.push_back(r.x[j]);
  }
  s.q = MixingDistribution(atoms, w);
  return s;
}

struct ConfidenceLimit {
  double theta_lower = 0.0;
  double epsilon = 0.0;
  std::int64_t c_lower = 0;  // floor(n (1 + theta_lower))
  EnvelopeSolution solution;
};

/// Kolmogorov quantile, then the envelope LP. Throws NumericalError when the LP is infeasible.
inline ConfidenceLimit lower_confidence_limit(const FrequencyData& d, const EnvelopeConfig& cfg = {}) {
  ConfidenceLimit out;
  out.epsilon = kolmogorov_quantile(d.n(), cfg.alpha, cfg.reps, cfg.seed, cfg.threads);
  const auto grid = envelope_grid(d, cfg);
  out.solution = solve_lp(build_lp(d, out.epsilon, grid));
  if (!out.solution.feasible)
    throw NumericalError(std::string("envelope LP ") + to_string(out.solution.status));
  out.theta_lower = out.solution.theta_lower;
  out.c_lower = static_cast<std::int64_t>(std::floor(static_cast<double>(d.n()) * (1.0 + out.theta_lower)));
  return out;
}

}  // namespace classcount
