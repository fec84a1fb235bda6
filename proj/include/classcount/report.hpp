#pragma once

// End-to-end analysis of one dataset and its JSON / text renderings.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "classcount/classical.hpp"
#include "classcount/envelope.hpp"
#include "classcount/frequency_data.hpp"
#include "classcount/hankel.hpp"
#include "classcount/mixture.hpp"
#include "classcount/montecarlo.hpp"
#include "classcount/npmle.hpp"
#include "json.hpp"

namespace classcount {

inline constexpr const char* kVersion = "0.1.0";

struct AnalysisConfig {
  int k_max = kDefaultKCap;
  int headline_k = 2;  // pseudo-MLE from theta_k(f_{Q-hat}) with k = min(headline_k, ladder length)
  NpmleConfig npmle;
  bool envelope = true;
  EnvelopeConfig envelope_cfg;
  bool bootstrap = false;
  BootstrapConfig bootstrap_cfg;
};

/// theta_DR, theta_CL, theta_CB and the ladder, evaluated at one pmf.
struct FunctionalRow {
  std::optional<double> theta_dr;
  std::optional<double> theta_cl;
  std::optional<double> theta_cb;
  std::vector<double> ladder;

  /// Values in estimator_names order, padded with nullopt up to k_max.
  std::vector<std::optional<double>> as_vector(int k_max) const {
    std::vector<std::optional<double>> v{theta_dr, theta_cl, theta_cb};
    for (int k = 1; k <= k_max; ++k) {
      if (k <= static_cast<int>(ladder.size()))
        v.emplace_back(ladder[k - 1]);
      else
        v.emplace_back(std::nullopt);
    }
    return v;
  }
};

struct AnalysisReport {
  FrequencyData data;
  AnalysisConfig config;

  FunctionalRow empirical;
  FunctionalRow npmle_plugin;
  HankelLadder ladder;
  std::vector<double> delta_se;  // for theta_1-hat..theta_chi-hat
  NpmleFit npmle;
  HankelLadder npmle_ladder;
  std::map<std::string, std::int64_t> pseudo_mle;
  std::string headline;  // key into pseudo_mle
  std::optional<ConfidenceLimit> envelope;
  std::optional<ResampleSummary> bootstrap;
  std::vector<std::string> diagnostics;

  bool degraded() const { return !diagnostics.empty(); }
};

namespace detail {

inline std::optional<double> try_functional(double (*fn)(const PmfSummary&), const PmfSummary& s,
                                            const char* name, std::vector<std::string>& notes) {
  try {
    return fn(s);
  } catch (const UndefinedEstimate& e) {
    notes.push_back(std::string(name) + ": " + e.what());
    return std::nullopt;
  }
}

inline FunctionalRow functional_row(const PmfSummary& s, const HankelLadder& lad, std::vector<std::string>& notes) {
  FunctionalRow row;
  row.theta_dr = try_functional(theta_dr, s, "theta_DR", notes);
  row.theta_cl = try_functional(theta_cl, s, "theta_CL", notes);
  row.theta_cb = try_functional(theta_cb, s, "theta_CB", notes);
  row.ladder = lad.theta;
  return row;
}

}  // namespace detail

/// Ladder, closed-form functionals, NPMLE, pseudo-MLEs, envelope and optional bootstrap.
/// Estimation problems are recorded in `diagnostics` rather than thrown.
inline AnalysisReport analyze(const FrequencyData& d, const AnalysisConfig& cfg = {}) {
  if (cfg.k_max < 1 || cfg.k_max > kDefaultKCap) throw DomainError("k_max must be in [1, 8]");
  AnalysisReport r{d, cfg, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}};
  std::vector<std::string> undefined;

  r.ladder = ladder(d, cfg.k_max);
  r.empirical = detail::functional_row(summarize(d), r.ladder, undefined);
  for (int k = 1; k <= r.ladder.chi_hat; ++k) r.delta_se.push_back(delta_se(d, k));
  if (!r.ladder.recurrence_holds()) r.diagnostics.push_back("empirical ladder: determinant recurrence check failed");

  r.npmle = fit_npmle(d, cfg.npmle);
  if (!r.npmle.converged) r.diagnostics.push_back("npmle: not converged, returning best iterate");
  r.npmle_ladder = ladder(model_moments(r.npmle.q, cfg.k_max), cfg.k_max);
  r.npmle_plugin = detail::functional_row(summarize(r.npmle.q), r.npmle_ladder, undefined);
  // Beyond the rank of Q-hat every theta_k equals the last rung.
  while (!r.npmle_plugin.ladder.empty() && static_cast<int>(r.npmle_plugin.ladder.size()) < cfg.k_max)
    r.npmle_plugin.ladder.push_back(r.npmle_plugin.ladder.back());
  for (const auto& u : undefined) r.diagnostics.push_back("undefined " + u);

  const auto n = d.n();
  try {
    r.pseudo_mle["chao1"] = chao1(d);
  } catch (const UndefinedEstimate&) {
    r.diagnostics.push_back("undefined chao1: n_2 = 0");
  }
  for (std::size_t k = 0; k < r.empirical.ladder.size(); ++k)
    r.pseudo_mle["theta_" + std::to_string(k + 1)] = pseudo_mle(n, r.empirical.ladder[k]);
  for (std::size_t k = 0; k < r.npmle_ladder.theta.size(); ++k)
    r.pseudo_mle["npmle_theta_" + std::to_string(k + 1)] = pseudo_mle(n, r.npmle_ladder.theta[k]);
  r.pseudo_mle["npmle_theta"] = pseudo_mle(n, odds(r.npmle.q));
  if (!r.npmle_ladder.theta.empty()) {
    const int k = std::min<int>(cfg.headline_k, static_cast<int>(r.npmle_ladder.theta.size()));
    r.headline = "npmle_theta_" + std::to_string(k);
  }

  if (cfg.envelope) {
    try {
      r.envelope = lower_confidence_limit(d, cfg.envelope_cfg);
    } catch (const NumericalError& e) {
      r.diagnostics.push_back(std::string("envelope: ") + e.what());
    }
  }

  if (cfg.bootstrap) {
    auto bcfg = cfg.bootstrap_cfg;
    bcfg.k_max = cfg.k_max;
    bcfg.npmle = cfg.npmle;
    const auto points = bcfg.plugin == PlugIn::npmle ? r.npmle_plugin.as_vector(cfg.k_max) : r.empirical.as_vector(cfg.k_max);
    r.bootstrap = bootstrap_quantiles(r.npmle.q, n, bcfg, points);
    for (const auto& e : r.bootstrap->estimators)
      if (e.flagged) r.diagnostics.push_back("bootstrap: " + e.name + " undefined in more than half of the replicates");
  }
  return r;
}

namespace detail {

inline nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

inline nlohmann::json row_json(const FunctionalRow& row) {
  return {{"theta_DR", opt(row.theta_dr)}, {"theta_CL", opt(row.theta_cl)}, {"theta_CB", opt(row.theta_cb)},
          {"ladder", row.ladder}};
}

inline nlohmann::json ladder_json(const HankelLadder& l) {
  return {{"theta", l.theta},         {"theta_recurrence", l.theta_recurrence},
          {"gamma_dets", l.gamma_dets}, {"hbar_dets", l.hbar_dets},
          {"chi_hat", l.chi_hat},     {"scale", l.scale},
          {"max_recurrence_error", l.max_recurrence_error}};
}

inline nlohmann::json mixing_json(const MixingDistribution& q) {
  return {{"atoms", std::vector<double>(q.atoms().begin(), q.atoms().end())},
          {"weights", std::vector<double>(q.weights().begin(), q.weights().end())}};
}

}  // namespace detail

inline nlohmann::json config_json(const AnalysisConfig& c) {
  nlohmann::json j = {
      {"version", kVersion},
      {"k_max", c.k_max},
      {"headline_k", c.headline_k},
      {"npmle",
       {{"init_grid_size", c.npmle.init_grid_size},
        {"init_grid_lo", c.npmle.init_grid_lo},
        {"init_em_sweeps", c.npmle.init_em_sweeps},
        {"scan_points", c.npmle.scan_points},
        {"scan_lo", c.npmle.scan_lo},
        {"tol", c.npmle.tol},
        {"max_outer", c.npmle.max_outer},
        {"max_newton", c.npmle.max_newton},
        {"merge_rel", c.npmle.merge_rel},
        {"min_atom", c.npmle.min_atom}}},
      {"envelope",
       {{"enabled", c.envelope},
        {"grid_size", c.envelope_cfg.grid_size},
        {"grid_lo", c.envelope_cfg.grid_lo},
        {"grid_hi", c.envelope_cfg.grid_hi},
        {"alpha", c.envelope_cfg.alpha},
        {"reps", c.envelope_cfg.reps},
        {"seed", c.envelope_cfg.seed}}},
      {"bootstrap",
       {{"enabled", c.bootstrap},
        {"replicates", c.bootstrap_cfg.replicates},
        {"alpha_q", c.bootstrap_cfg.alpha_q},
        {"seed", c.bootstrap_cfg.seed},
        {"plugin", to_string(c.bootstrap_cfg.plugin)},
        {"unconditional", c.bootstrap_cfg.unconditional}}},
      {"rng", kRngAlgorithm},
  };
  return j;
}

inline nlohmann::json bootstrap_json(const ResampleSummary& b) {
  nlohmann::json est = nlohmann::json::array();
  for (const auto& e : b.estimators) {
    nlohmann::json item = {{"name", e.name},       {"point", detail::opt(e.point)}, {"quantile", detail::opt(e.quantile)},
                           {"missing", e.missing}, {"flagged", e.flagged}};
    if (!e.replicates.empty()) item["replicates"] = e.replicates;
    est.push_back(item);
  }
  return {{"replicates", b.replicates}, {"seed", b.seed},       {"resample_size", b.resample_size},
          {"rng", b.rng},               {"plugin", b.plugin},   {"alpha_q", b.alpha_q},
          {"estimators", est}};
}

inline nlohmann::json to_json(const AnalysisReport& r) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [x, nx] : r.data.counts()) counts[std::to_string(x)] = nx;
  nlohmann::json j = {
      {"dataset", {{"n", r.data.n()}, {"S", r.data.S()}, {"x_max", r.data.x_max()}, {"counts", counts}}},
      {"estimates", {{"empirical", detail::row_json(r.empirical)}, {"npmle_plugin", detail::row_json(r.npmle_plugin)}}},
      {"ladder", detail::ladder_json(r.ladder)},
      {"delta_se", r.delta_se},
      {"npmle",
       {{"q", detail::mixing_json(r.npmle.q)},
        {"chi", r.npmle.q.size()},
        {"odds", odds(r.npmle.q)},
        {"converged", r.npmle.converged},
        {"iterations", r.npmle.iterations},
        {"log_likelihood", r.npmle.log_likelihood},
        {"sup_gradient", r.npmle.sup_gradient},
        {"ladder", detail::ladder_json(r.npmle_ladder)}}},
      {"pseudo_mle", r.pseudo_mle},
      {"headline", r.headline},
      {"diagnostics", r.diagnostics},
      {"config", config_json(r.config)},
  };
  if (r.envelope) {
    const auto& e = *r.envelope;
    j["envelope"] = {{"epsilon", e.epsilon},
                     {"theta_lower", e.theta_lower},
                     {"c_lower", e.c_lower},
                     {"status", to_string(e.solution.status)},
                     {"q", detail::mixing_json(e.solution.q)},
                     {"active_constraints", e.solution.active_constraints}};
  } else {
    j["envelope"] = nullptr;
  }
  j["bootstrap"] = r.bootstrap ? bootstrap_json(*r.bootstrap) : nlohmann::json();
  return j;
}

namespace detail {

inline std::string cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

inline std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace detail

/// Table-1-style summary at 3 decimals. Every number also appears in to_json.
inline std::string render_table(const AnalysisReport& r) {
  const int k_max = std::max<int>(1, static_cast<int>(std::max(r.empirical.ladder.size(), r.npmle_plugin.ladder.size())));
  const auto names = estimator_names(k_max);
  std::ostringstream out;
  out << "n = " << r.data.n() << "  S = " << r.data.S() << "  x_max = " << r.data.x_max() << "\n\n";
  out << std::string(12, ' ');
  for (const auto& name : names) out << detail::pad(name, 10);
  out << "\n";
  auto line = [&](const std::string& label, const std::vector<std::optional<double>>& values) {
    out << label << std::string(label.size() < 12 ? 12 - label.size() : 1, ' ');
    for (const auto& v : values) out << detail::pad(detail::cell(v), 10);
    out << "\n";
  };
  line("f_n", r.empirical.as_vector(k_max));
  line("f_Qhat", r.npmle_plugin.as_vector(k_max));
  if (r.bootstrap) {
    std::vector<std::optional<double>> q;
    for (std::size_t i = 0; i < names.size(); ++i)
      q.push_back(i < r.bootstrap->estimators.size() ? r.bootstrap->estimators[i].quantile : std::nullopt);
    char pct[32];
    std::snprintf(pct, sizeof pct, "%g%%", 100.0 * r.bootstrap->alpha_q);
    line(std::string(pct) + " quant", q);
  }
  out << "\nchi_hat = " << r.ladder.chi_hat << "  chi(Qhat) = " << r.npmle.q.size()
      << "  theta(f_Qhat) = " << detail::cell(odds(r.npmle.q)) << (r.npmle.converged ? "" : "  (npmle not converged)")
      << "\n";
  if (r.envelope)
    out << "lower limit theta = " << detail::cell(r.envelope->theta_lower) << "  (eps_n = " << detail::cell(r.envelope->epsilon)
        << ")  c >= " << r.envelope->c_lower << "\n";
  out << "pseudo-MLE";
  if (!r.headline.empty()) out << " (" << r.headline << ") = " << r.pseudo_mle.at(r.headline);
  if (r.pseudo_mle.count("chao1")) out << "  chao1 = " << r.pseudo_mle.at("chao1");
  out << "\n";
  for (const auto& d : r.diagnostics) out << "note: " << d << "\n";
  return out.str();
}

}  // namespace classcount
