#pragma once

// Nonparametric MLE of the mixing distribution Q for zero-truncated Poisson mixtures.
//
// Support refinement: EM on a log grid, collapse to clusters, then repeatedly add the
// maximizer of the gradient function D and polish all atoms and weights jointly by a
// damped Newton ascent. Stops once sup D <= tol * n on the scan grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "classcount/error.hpp"
#include "classcount/frequency_data.hpp"
#include "classcount/linalg.hpp"
#include "classcount/mixture.hpp"

namespace classcount {

struct NpmleConfig {
  int init_grid_size = 50;
  double init_grid_lo = 1e-3;
  int init_em_sweeps = 300;
  int scan_points = 2000;
  double scan_lo = 1e-4;
  double tol = 1e-6;  // certificate: sup D <= tol * n
  int max_outer = 500;
  int max_newton = 200;
  double merge_rel = 1e-6;
  double min_atom = 1e-8;
};

struct NpmleFit {
  MixingDistribution q;
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
  double sup_gradient = 0.0;  // sup D over the scan grid, absolute (compare with tol * n)
  bool monotone = true;       // log-likelihood never decreased across outer iterations
  std::vector<double> ll_trace;
};

namespace detail {

// Sufficient statistics: distinct x, their counts and log x!.
struct CountTable {
  std::vector<int> x;
  std::vector<double> nx;
  std::vector<double> log_fact;
  double n = 0.0;

  explicit CountTable(const FrequencyData& d) {
    for (const auto& [k, c] : d.counts()) {
      x.push_back(k);
      nx.push_back(static_cast<double>(c));
      log_fact.push_back(std::lgamma(k + 1.0));
      n += static_cast<double>(c);
    }
  }
  std::size_t size() const noexcept { return x.size(); }

  double log_pmf(double lambda, std::size_t i) const {
    return x[i] * std::log(lambda) - log_fact[i] - log_expm1(lambda);
  }
};

struct Support {
  std::vector<double> atoms;
  std::vector<double> weights;
};

inline std::vector<double> log_space(double lo, double hi, int count) {
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    g[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / std::max(count - 1, 1));
  return g;
}

// kernel[j][i] = f_{atom_j}(x_i)
inline std::vector<std::vector<double>> kernel(const CountTable& t, const std::vector<double>& atoms) {
  std::vector<std::vector<double>> k(atoms.size(), std::vector<double>(t.size()));
  for (std::size_t j = 0; j < atoms.size(); ++j)
    for (std::size_t i = 0; i < t.size(); ++i) k[j][i] = std::exp(t.log_pmf(atoms[j], i));
  return k;
}

inline std::vector<double> fitted(const std::vector<std::vector<double>>& k, const std::vector<double>& w) {
  std::vector<double> f(k.empty() ? 0 : k[0].size(), 0.0);
  for (std::size_t j = 0; j < k.size(); ++j)
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += w[j] * k[j][i];
  return f;
}

inline double loglik(const CountTable& t, const Support& s) {
  const auto f = fitted(kernel(t, s.atoms), s.weights);
  double ll = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) ll += t.nx[i] * std::log(f[i]);
  return ll;
}

inline double gradient_at(const CountTable& t, const std::vector<double>& f, double lambda) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += t.nx[i] * std::exp(t.log_pmf(lambda, i)) / f[i];
  return s - t.n;
}

inline void em_sweeps(const CountTable& t, Support& s, int sweeps) {
  const auto k = kernel(t, s.atoms);
  for (int it = 0; it < sweeps; ++it) {
    const auto f = fitted(k, s.weights);
    for (std::size_t j = 0; j < s.atoms.size(); ++j) {
      double r = 0.0;
      for (std::size_t i = 0; i < t.size(); ++i) r += t.nx[i] * k[j][i] / f[i];
      s.weights[j] *= r / t.n;
    }
  }
}

// Sorts, merges atoms within merge_rel of each other and drops weights below 1e-12.
inline void tidy(Support& s, double merge_rel) {
  std::vector<std::size_t> order(s.atoms.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.atoms[a] < s.atoms[b]; });
  Support out;
  for (auto j : order) {
    const double a = s.atoms[j];
    const double w = s.weights[j];
    if (!(w >= MixingDistribution::kPruneWeight)) continue;
    if (!out.atoms.empty() && std::abs(a - out.atoms.back()) <= merge_rel * a) {
      const double total = out.weights.back() + w;
      out.atoms.back() = (out.atoms.back() * out.weights.back() + a * w) / total;
      out.weights.back() = total;
      continue;
    }
    out.atoms.push_back(a);
    out.weights.push_back(w);
  }
  double mass = 0.0;
  for (double w : out.weights) mass += w;
  for (double& w : out.weights) w /= mass;
  s = std::move(out);
}

// Collapses runs of adjacent grid points carrying weight into one atom each.
inline Support collapse_grid(const Support& grid, double floor) {
  Support out;
  double wsum = 0.0;
  double lsum = 0.0;
  auto flush = [&] {
    if (wsum > 0.0) {
      out.atoms.push_back(std::exp(lsum / wsum));
      out.weights.push_back(wsum);
    }
    wsum = lsum = 0.0;
  };
  for (std::size_t j = 0; j < grid.atoms.size(); ++j) {
    if (grid.weights[j] < floor) {
      flush();
      continue;
    }
    wsum += grid.weights[j];
    lsum += grid.weights[j] * std::log(grid.atoms[j]);
  }
  flush();
  return out;
}

// Penalized objective sum n_x log F(x) - n (sum pi - 1) in (log lambda, log pi). Its
// unconstrained maximizer has sum pi = 1, so no simplex constraint is needed.
struct Objective {
  const CountTable& t;
  double min_atom;

  double value(const std::vector<double>& p) const {
    const std::size_t m = p.size() / 2;
    double mass = 0.0;
    std::vector<double> f(t.size(), 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double lambda = std::exp(p[j]);
      const double pi = std::exp(p[m + j]);
      mass += pi;
      for (std::size_t i = 0; i < t.size(); ++i) f[i] += pi * std::exp(t.log_pmf(lambda, i));
    }
    double v = -t.n * (mass - 1.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!(f[i] > 0.0)) return -std::numeric_limits<double>::infinity();
      v += t.nx[i] * std::log(f[i]);
    }
    return v;
  }

  // Gradient and Hessian. With a = pi f and b = pi f s, s = x - lambda / (1 - e^-lambda),
  // the partials of F are dF/dz = a, dF/du = b, d2F/dz2 = a, d2F/dzdu = b, d2F/du2 = a (s^2 + s').
  void derivatives(const std::vector<double>& p, std::vector<double>& g, linalg::Matrix& h) const {
    const std::size_t m = p.size() / 2;
    const std::size_t dim = 2 * m;
    std::vector<std::vector<double>> a(m, std::vector<double>(t.size()));
    std::vector<std::vector<double>> b(m, std::vector<double>(t.size()));
    std::vector<std::vector<double>> c(m, std::vector<double>(t.size()));
    std::vector<double> f(t.size(), 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double lambda = std::exp(p[j]);
      const double pi = std::exp(p[m + j]);
      const double detect = -std::expm1(-lambda);
      const double mean = lambda / detect;
      // lambda d/dlambda of the mean, negated.
      const double ds = -lambda * (detect - lambda * std::exp(-lambda)) / (detect * detect);
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double af = pi * std::exp(t.log_pmf(lambda, i));
        const double s = t.x[i] - mean;
        a[j][i] = af;
        b[j][i] = af * s;
        c[j][i] = af * (s * s + ds);
        f[i] += af;
      }
    }
    g.assign(dim, 0.0);
    h = linalg::Matrix(dim, dim);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double w = t.nx[i] / f[i];
      std::vector<double> d1(dim);
      for (std::size_t j = 0; j < m; ++j) {
        d1[j] = b[j][i];
        d1[m + j] = a[j][i];
      }
      for (std::size_t r = 0; r < dim; ++r) {
        g[r] += w * d1[r];
        for (std::size_t q = 0; q < dim; ++q) h(r, q) -= w * d1[r] * d1[q] / f[i];
      }
      for (std::size_t j = 0; j < m; ++j) {
        h(j, j) += w * c[j][i];
        h(m + j, m + j) += w * a[j][i];
        h(j, m + j) += w * b[j][i];
        h(m + j, j) += w * b[j][i];
      }
    }
    for (std::size_t j = 0; j < m; ++j) {
      const double pi = std::exp(p[m + j]);
      g[m + j] -= t.n * pi;
      h(m + j, m + j) -= t.n * pi;
    }
  }
};

// Damped Newton ascent on all atoms and weights; never decreases the objective.
inline void newton_polish(const CountTable& t, Support& s, const NpmleConfig& cfg) {
  const std::size_t m = s.atoms.size();
  if (m == 0) return;
  const Objective obj{t, cfg.min_atom};
  std::vector<double> p(2 * m);
  for (std::size_t j = 0; j < m; ++j) {
    p[j] = std::log(s.atoms[j]);
    p[m + j] = std::log(s.weights[j]);
  }
  double value = obj.value(p);
  double damping = 1e-6;
  const double lo = std::log(cfg.min_atom);
  std::vector<double> g;
  linalg::Matrix h;
  for (int it = 0; it < cfg.max_newton; ++it) {
    obj.derivatives(p, g, h);
    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::abs(v));
    if (gmax < 1e-11 * t.n) break;
    bool improved = false;
    for (int attempt = 0; attempt < 40 && !improved; ++attempt) {
      linalg::Matrix a(2 * m, 2 * m);
      double scale = 0.0;
      for (std::size_t r = 0; r < 2 * m; ++r) scale = std::max(scale, std::abs(h(r, r)));
      for (std::size_t r = 0; r < 2 * m; ++r)
        for (std::size_t q = 0; q < 2 * m; ++q) a(r, q) = -h(r, q) + (r == q ? damping * scale : 0.0);
      std::vector<double> step;
      try {
        step = linalg::solve(a, g);
      } catch (const NumericalError&) {
        damping *= 10.0;
        continue;
      }
      double slope = 0.0;
      for (std::size_t r = 0; r < 2 * m; ++r) slope += g[r] * step[r];
      if (!(slope > 0.0)) {
        damping *= 10.0;
        continue;
      }
      std::vector<double> trial(p);
      for (std::size_t r = 0; r < 2 * m; ++r) {
        trial[r] = p[r] + std::clamp(step[r], -2.0, 2.0);
        if (r < m) trial[r] = std::max(trial[r], lo);
      }
      const double v = obj.value(trial);
      if (v > value) {
        p = trial;
        value = v;
        damping = std::max(damping / 10.0, 1e-12);
        improved = true;
      } else {
        damping *= 10.0;
      }
    }
    if (!improved) break;
  }
  for (std::size_t j = 0; j < m; ++j) {
    s.atoms[j] = std::exp(p[j]);
    s.weights[j] = std::exp(p[m + j]);
  }
}

// Weight alpha in [0, 1) maximizing the likelihood of (1 - alpha) Q + alpha delta(lambda).
inline double vertex_step(const CountTable& t, const std::vector<double>& f, double lambda) {
  std::vector<double> k(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) k[i] = std::exp(t.log_pmf(lambda, i));
  auto slope = [&](double alpha) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += t.nx[i] * (k[i] - f[i]) / ((1.0 - alpha) * f[i] + alpha * k[i]);
    return s;
  };
  double lo = 0.0;
  double hi = 1.0 - 1e-12;
  if (slope(hi) > 0.0) return hi;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct ScanResult {
  double lambda = 0.0;
  double value = -std::numeric_limits<double>::infinity();
};

inline ScanResult scan_gradient(const CountTable& t, const Support& s, const std::vector<double>& scan) {
  const auto f = fitted(kernel(t, s.atoms), s.weights);
  ScanResult best;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const double v = gradient_at(t, f, scan[i]);
    if (v > best.value) {
      best = {scan[i], v};
      arg = i;
    }
  }
  // Golden-section polish in log lambda between the neighbours of the best scan point.
  double a = std::log(scan[arg > 0 ? arg - 1 : 0]);
  double b = std::log(scan[std::min(arg + 1, scan.size() - 1)]);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = gradient_at(t, f, std::exp(c));
  double fd = gradient_at(t, f, std::exp(d));
  for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = gradient_at(t, f, std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = gradient_at(t, f, std::exp(d));
    }
  }
  const double polished = std::max(fc, fd);
  if (polished > best.value) best = {std::exp(fc > fd ? c : d), polished};
  return best;
}

inline MixingDistribution to_distribution(const Support& s) {
  double mass = 0.0;
  for (double w : s.weights) mass += w;
  std::vector<double> w(s.weights);
  for (double& v : w) v /= mass;
  return {s.atoms, w};
}

}  // namespace detail

/// Fits Q-hat and certifies it by the gradient bound sup_lambda D(lambda; Q-hat) <= tol * n.
/// A fit that runs out of iterations is returned with converged = false.
inline NpmleFit fit_npmle(const FrequencyData& d, const NpmleConfig& cfg = {}) {
  const detail::CountTable t(d);
  const double hi = d.x_max() + 10.0 * std::sqrt(static_cast<double>(d.x_max()));
  const auto scan = detail::log_space(cfg.scan_lo, hi, cfg.scan_points);

  detail::Support s{detail::log_space(cfg.init_grid_lo, hi, cfg.init_grid_size),
                    std::vector<double>(static_cast<std::size_t>(cfg.init_grid_size), 1.0 / cfg.init_grid_size)};
  detail::em_sweeps(t, s, cfg.init_em_sweeps);
  s = detail::collapse_grid(s, 1e-6);
  detail::tidy(s, cfg.merge_rel);

  NpmleFit fit;
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    detail::em_sweeps(t, s, 5);
    detail::newton_polish(t, s, cfg);
    detail::tidy(s, cfg.merge_rel);
    const double ll = detail::loglik(t, s);
    if (!fit.ll_trace.empty() && ll < fit.ll_trace.back() - 1e-9 * std::abs(ll)) fit.monotone = false;
    fit.ll_trace.push_back(ll);
    fit.iterations = outer + 1;

    const auto best = detail::scan_gradient(t, s, scan);
    fit.sup_gradient = best.value;
    if (best.value <= cfg.tol * t.n) {
      fit.converged = true;
      break;
    }
    const auto f = detail::fitted(detail::kernel(t, s.atoms), s.weights);
    const double alpha = detail::vertex_step(t, f, best.lambda);
    for (double& w : s.weights) w *= 1.0 - alpha;
    s.atoms.push_back(best.lambda);
    s.weights.push_back(alpha);
    detail::tidy(s, cfg.merge_rel);
  }
  fit.q = detail::to_distribution(s);
  fit.log_likelihood = log_likelihood(fit.q, d);
  return fit;
}

}  // namespace classcount
