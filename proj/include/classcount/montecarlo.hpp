#pragma once

// Synthetic data from (c, P) or Q, the model-based bootstrap and coverage experiments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "classcount/classical.hpp"
#include "classcount/envelope.hpp"
#include "classcount/error.hpp"
#include "classcount/frequency_data.hpp"
#include "classcount/hankel.hpp"
#include "classcount/mixture.hpp"
#include "classcount/npmle.hpp"
#include "classcount/random.hpp"

namespace classcount {

namespace detail {

inline std::vector<double> cumulative_weights(const MixingDistribution& q) {
  std::vector<double> c(q.weights().begin(), q.weights().end());
  for (std::size_t j = 1; j < c.size(); ++j) c[j] += c[j - 1];
  return c;
}

inline FrequencyData tabulate(const std::vector<std::int64_t>& values) {
  FrequencyData::Counts counts;
  for (auto v : values) ++counts[static_cast<int>(v)];
  return FrequencyData(counts);
}

}  // namespace detail

struct PopulationSample {
  std::optional<FrequencyData> data;  // empty when no class was detected
  std::int64_t n = 0;
  std::int64_t n0 = 0;  // undetected classes, c - n
};

/// Draws lambda_i ~ P and Y_i ~ Poisson(lambda_i) for the c classes; keeps the Y_i > 0.
inline PopulationSample sample_population(const PopulationModel& model, Rng& rng) {
  if (model.c < 1) throw DomainError("sample_population: c must be >= 1");
  if (model.p.empty()) throw DomainError("sample_population: P has no atoms");
  const auto cum = detail::cumulative_weights(model.p);
  std::vector<std::int64_t> seen;
  for (std::int64_t i = 0; i < model.c; ++i) {
    const double lambda = model.p.atoms()[rng.categorical(cum)];
    const auto y = rng.poisson(lambda);
    if (y > 0) seen.push_back(y);
  }
  PopulationSample out;
  out.n = static_cast<std::int64_t>(seen.size());
  out.n0 = model.c - out.n;
  if (!seen.empty()) out.data = detail::tabulate(seen);
  return out;
}

/// n draws from f_Q.
inline FrequencyData sample_truncated(const MixingDistribution& q, std::int64_t n, Rng& rng) {
  if (n < 1) throw DomainError("sample_truncated: n must be >= 1");
  if (q.empty()) throw DomainError("sample_truncated: Q has no atoms");
  const auto cum = detail::cumulative_weights(q);
  std::vector<std::int64_t> values(static_cast<std::size_t>(n));
  for (auto& v : values) v = rng.truncated_poisson(q.atoms()[rng.categorical(cum)]);
  return detail::tabulate(values);
}

/// How each replicate turns data into estimates.
enum class PlugIn {
  npmle,      // refit Q-hat on the resample and evaluate the functionals at f_{Q-hat}
  empirical,  // evaluate the functionals at the resample's empirical pmf
};

inline const char* to_string(PlugIn p) { return p == PlugIn::npmle ? "npmle" : "empirical"; }

/// theta_DR, theta_CL, theta_CB, theta_1..theta_k.
inline std::vector<std::string> estimator_names(int k_max) {
  std::vector<std::string> names{"theta_DR", "theta_CL", "theta_CB"};
  for (int k = 1; k <= k_max; ++k) names.push_back("theta_" + std::to_string(k));
  return names;
}

/// Estimates in estimator_names order; nullopt marks an undefined value.
///
/// Under the NPMLE plug-in the ladder stops once Q-hat's moment matrices lose rank, and
/// theta_k for larger k equals the last computed value.
inline std::vector<std::optional<double>> evaluate_estimators(const FrequencyData& d, PlugIn plugin, int k_max,
                                                              const NpmleConfig& npmle_cfg = {}) {
  std::vector<std::optional<double>> out;
  PmfSummary summary;
  HankelLadder lad;
  if (plugin == PlugIn::npmle) {
    const auto fit = fit_npmle(d, npmle_cfg);
    summary = summarize(fit.q);
    lad = ladder(model_moments(fit.q, k_max), k_max);
  } else {
    summary = summarize(d);
    lad = ladder(d, k_max);
  }
  for (auto fn : {theta_dr, theta_cl, theta_cb}) {
    try {
      out.emplace_back(fn(summary));
    } catch (const UndefinedEstimate&) {
      out.emplace_back(std::nullopt);
    }
  }
  for (int k = 1; k <= k_max; ++k) {
    if (k <= lad.chi_hat)
      out.emplace_back(lad.theta[k - 1]);
    else if (plugin == PlugIn::npmle && lad.chi_hat > 0)
      out.emplace_back(lad.theta.back());
    else
      out.emplace_back(std::nullopt);
  }
  return out;
}

/// Linear-interpolation sample quantile (type 7). `values` need not be sorted.
inline double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct BootstrapConfig {
  int replicates = 400;
  double alpha_q = 0.05;
  int k_max = 5;
  std::uint64_t seed = 20260101;
  int threads = 1;
  PlugIn plugin = PlugIn::npmle;
  bool unconditional = false;  // redraw n ~ binomial(c-hat, 1 / (1 + theta(Q-hat)))
  bool keep_replicates = false;
  NpmleConfig npmle;
};

struct EstimatorSummary {
  std::string name;
  std::optional<double> point;
  std::optional<double> quantile;
  int missing = 0;
  bool flagged = false;  // undefined in more than half of the replicates
  std::vector<double> replicates;  // in replicate order, missing ones skipped; only when kept
};

struct ResampleSummary {
  std::vector<EstimatorSummary> estimators;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::int64_t resample_size = 0;
  std::string rng = kRngAlgorithm;
  std::string plugin;
  double alpha_q = 0.05;
};

/// Model-based bootstrap from q_hat. Replicate b draws from its own stream derive_seed(seed, b),
/// so the summary does not depend on the thread count.
inline ResampleSummary bootstrap_quantiles(const MixingDistribution& q_hat, std::int64_t n, const BootstrapConfig& cfg,
                                           const std::vector<std::optional<double>>& points = {}) {
  if (cfg.replicates < 1) throw DomainError("bootstrap: B must be >= 1");
  if (n < 1) throw DomainError("bootstrap: resample size must be >= 1");
  const auto names = estimator_names(cfg.k_max);
  const int b_total = cfg.replicates;
  std::vector<std::vector<std::optional<double>>> rows(static_cast<std::size_t>(b_total));

  const double theta_hat = odds(q_hat);
  const auto c_hat = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * (1.0 + theta_hat)));
  auto run = [&](int b) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(b)));
    std::int64_t size = n;
    if (cfg.unconditional) size = std::max<std::int64_t>(1, rng.binomial(c_hat, 1.0 / (1.0 + theta_hat)));
    const auto data = sample_truncated(q_hat, size, rng);
    rows[static_cast<std::size_t>(b)] = evaluate_estimators(data, cfg.plugin, cfg.k_max, cfg.npmle);
  };
  const int threads = std::max(1, std::min(cfg.threads, b_total));
  if (threads == 1) {
    for (int b = 0; b < b_total; ++b) run(b);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int b = t; b < b_total; b += threads) run(b);
      });
    for (auto& th : pool) th.join();
  }

  ResampleSummary out;
  out.replicates = b_total;
  out.seed = cfg.seed;
  out.resample_size = n;
  out.plugin = to_string(cfg.plugin);
  out.alpha_q = cfg.alpha_q;
  for (std::size_t e = 0; e < names.size(); ++e) {
    EstimatorSummary s;
    s.name = names[e];
    if (e < points.size()) s.point = points[e];
    std::vector<double> values;
    for (const auto& row : rows) {
      if (row[e])
        values.push_back(*row[e]);
      else
        ++s.missing;
    }
    if (!values.empty()) s.quantile = quantile(values, cfg.alpha_q);
    s.flagged = 2 * s.missing > b_total;
    if (cfg.keep_replicates) s.replicates = std::move(values);
    out.estimators.push_back(std::move(s));
  }
  return out;
}

struct CoverageResult {
  int runs = 0;
  int covered = 0;
  double rate = 0.0;
  double wilson_lo = 0.0;  // 95% Wilson score interval
  double wilson_hi = 0.0;
};

inline CoverageResult coverage_summary(int runs, int covered) {
  constexpr double z = 1.959963984540054;
  CoverageResult r{runs, covered, static_cast<double>(covered) / runs, 0.0, 0.0};
  const double n = runs;
  const double centre = (r.rate + z * z / (2.0 * n)) / (1.0 + z * z / n);
  const double half = z * std::sqrt(r.rate * (1.0 - r.rate) / n + z * z / (4.0 * n * n)) / (1.0 + z * z / n);
  r.wilson_lo = std::max(0.0, centre - half);
  r.wilson_hi = std::min(1.0, centre + half);
  return r;
}

/// Runs `covers(rng)` once per run on stream derive_seed(seed, run) and tallies the hits.
template <class Covers>
CoverageResult coverage_experiment(int runs, std::uint64_t seed, Covers&& covers) {
  if (runs < 1) throw DomainError("coverage_experiment: runs must be >= 1");
  int hit = 0;
  for (int b = 0; b < runs; ++b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    if (covers(rng)) ++hit;
  }
  return coverage_summary(runs, hit);
}

/// How often the envelope limit stays at or below theta(Q) for samples of size n from f_Q.
inline CoverageResult envelope_coverage(const MixingDistribution& q, std::int64_t n, int runs, std::uint64_t seed,
                                        const EnvelopeConfig& cfg = {}) {
  const double truth = odds(q);
  const double eps = kolmogorov_quantile(n, cfg.alpha, cfg.reps, cfg.seed, cfg.threads);
  return coverage_experiment(runs, seed, [&](Rng& rng) {
    const auto d = sample_truncated(q, n, rng);
    const auto sol = solve_lp(build_lp(d, eps, envelope_grid(d, cfg)));
    return !sol.feasible || sol.theta_lower <= truth;
  });
}

/// How often theta_k-hat stays at or above theta(Q) when read as an upper limit.
/// An undefined theta_k-hat counts as an infinite limit.
inline CoverageResult ladder_upper_coverage(const MixingDistribution& q, std::int64_t n, int k, int runs,
                                            std::uint64_t seed) {
  const double truth = odds(q);
  return coverage_experiment(runs, seed, [&](Rng& rng) {
    const auto lad = ladder(sample_truncated(q, n, rng), k);
    return lad.chi_hat < k || truth <= lad.theta[static_cast<std::size_t>(k - 1)];
  });
}

/// How often the trivial lower limit n stays at or below c. Runs with n = 0 count as covered.
inline CoverageResult count_lower_coverage(const PopulationModel& model, int runs, std::uint64_t seed) {
  return coverage_experiment(runs, seed, [&](Rng& rng) { return sample_population(model, rng).n <= model.c; });
}

}  // namespace classcount
