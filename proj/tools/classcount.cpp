// classcount: estimate the number of classes from frequency-of-frequencies data.
//
// Exit codes: 0 success, 1 estimation degraded (see the report's notes), 2 usage or I/O error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "classcount.hpp"
#include "json.hpp"

namespace cc = classcount;

namespace {

constexpr int kExitDegraded = 1;
constexpr int kExitUsage = 2;

struct InputOptions {
  std::string path;
  bool raw = false;
};

cc::FrequencyData load(const InputOptions& in) {
  std::ifstream file(in.path);
  if (!file) throw std::runtime_error("cannot open " + in.path);
  return in.raw ? cc::parse_raw_counts(file) : cc::parse_frequencies(file);
}

void add_input(CLI::App* app, InputOptions& in) {
  app->add_option("file", in.path, "frequency file (\"x n_x\" per line) or raw counts with --raw")
      ->required()
      ->check(CLI::ExistingFile);
  app->add_flag("--raw", in.raw, "input holds one per-class count per line");
}

void add_envelope_options(CLI::App* app, cc::EnvelopeConfig& cfg) {
  app->add_option("--alpha", cfg.alpha, "one-sided level")->check(CLI::Range(1e-6, 0.5));
  app->add_option("--reps", cfg.reps, "Monte Carlo replicates for eps_n")->check(CLI::Range(1, 100'000'000));
  app->add_option("--grid-size", cfg.grid_size, "LP grid atoms")->check(CLI::Range(1, 100'000));
  app->add_option("--grid-lo", cfg.grid_lo, "smallest grid atom")->check(CLI::PositiveNumber);
  app->add_option("--grid-hi", cfg.grid_hi, "largest grid atom (0: x_max + 10 sqrt(x_max))")->check(CLI::NonNegativeNumber);
}

cc::PlugIn parse_plugin(const std::string& s) { return s == "empirical" ? cc::PlugIn::empirical : cc::PlugIn::npmle; }

void add_bootstrap_options(CLI::App* app, cc::BootstrapConfig& cfg, std::string& plugin) {
  app->add_option("--alpha-q", cfg.alpha_q, "lower quantile level")->check(CLI::Range(0.0, 1.0));
  app->add_option("--plugin", plugin, "per-replicate estimates at the refitted NPMLE or the empirical pmf")
      ->check(CLI::IsMember({"npmle", "empirical"}));
  app->add_flag("--unconditional", cfg.unconditional, "redraw n ~ binomial(c-hat, detection probability)");
}

void write_replicates_csv(const cc::ResampleSummary& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "estimator,index,value\n";
  out.precision(17);
  for (const auto& e : s.estimators)
    for (std::size_t i = 0; i < e.replicates.size(); ++i) out << e.name << ',' << i << ',' << e.replicates[i] << '\n';
}

void emit(const nlohmann::json& j, const std::string& text, const std::string& format, const std::string& json_path) {
  if (format == "json")
    std::cout << j.dump(2) << "\n";
  else
    std::cout << text;
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot write " + json_path);
    out << j.dump(2) << "\n";
  }
}

std::string config_line(const nlohmann::json& config) { return "config: " + config.dump() + "\n"; }

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-count estimation under zero-truncated Poisson mixtures"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cc::kVersion);

  std::uint64_t seed = 20260101;
  int threads = 1;
  std::string format = "text";
  std::string json_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "base seed for every Monte Carlo stream");
    sub->add_option("--threads", threads, "worker threads; results do not depend on it")->check(CLI::Range(1, 256));
    sub->add_option("--format", format, "stdout format")->check(CLI::IsMember({"text", "json"}));
    sub->add_option("--json", json_path, "also write the JSON report to this path");
  };

  // analyze
  InputOptions analyze_in;
  cc::AnalysisConfig acfg;
  std::string analyze_plugin = "npmle";
  int analyze_b = 0;
  std::string analyze_dump;
  auto* analyze = app.add_subcommand("analyze", "full report: ladder, functionals, NPMLE, pseudo-MLEs, envelope");
  add_input(analyze, analyze_in);
  add_common(analyze);
  analyze->add_option("--kmax", acfg.k_max, "largest ladder order")->check(CLI::Range(1, cc::kDefaultKCap));
  analyze->add_option("--headline-k", acfg.headline_k, "order k of the reported pseudo-MLE n (1 + theta_k(f_Qhat))")
      ->check(CLI::Range(1, cc::kDefaultKCap));
  analyze->add_flag("--no-envelope", "skip the LP lower limit");
  add_envelope_options(analyze, acfg.envelope_cfg);
  analyze->add_option("--bootstrap", analyze_b, "model-based resamples (0: off)")->check(CLI::Range(0, 1'000'000));
  add_bootstrap_options(analyze, acfg.bootstrap_cfg, analyze_plugin);
  analyze->add_option("--dump-replicates", analyze_dump, "write bootstrap replicates as CSV");

  // envelope
  InputOptions env_in;
  cc::EnvelopeConfig ecfg;
  double fixed_eps = 0.0;
  auto* envelope = app.add_subcommand("envelope", "one-sided lower confidence limit for the odds");
  add_input(envelope, env_in);
  add_common(envelope);
  add_envelope_options(envelope, ecfg);
  envelope->add_option("--epsilon", fixed_eps, "use this band instead of the Monte Carlo quantile")
      ->check(CLI::PositiveNumber);

  // bootstrap
  InputOptions boot_in;
  cc::BootstrapConfig bcfg;
  std::string boot_plugin = "npmle";
  std::string boot_dump;
  auto* bootstrap = app.add_subcommand("bootstrap", "lower quantiles of resampled estimates from the NPMLE");
  add_input(bootstrap, boot_in);
  add_common(bootstrap);
  bootstrap->add_option("-B,--replicates", bcfg.replicates, "resamples")->check(CLI::Range(1, 1'000'000));
  bootstrap->add_option("--kmax", bcfg.k_max, "largest ladder order")->check(CLI::Range(1, cc::kDefaultKCap));
  add_bootstrap_options(bootstrap, bcfg, boot_plugin);
  bootstrap->add_option("--dump-replicates", boot_dump, "write replicates as CSV");

  // simulate
  std::int64_t sim_c = 1000;
  std::vector<double> sim_atoms{1.0};
  std::vector<double> sim_weights{1.0};
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "draw a frequency table from a population model (c, P)");
  add_common(simulate);
  simulate->add_option("--c", sim_c, "number of classes")->check(CLI::Range(std::int64_t{1}, std::int64_t{100'000'000}));
  simulate->add_option("--atoms", sim_atoms, "atoms of P")->delimiter(',');
  simulate->add_option("--weights", sim_weights, "weights of P")->delimiter(',');
  simulate->add_option("-o,--out", sim_out, "output file (default stdout)");

  // affinity
  std::vector<std::int64_t> aff_c{64};
  std::vector<double> aff_rho{1.0};
  double aff_alpha = 0.05;
  auto* affinity = app.add_subcommand("affinity", "testing affinity A(c, rho) as CSV");
  affinity->add_option("--c", aff_c, "class counts")->delimiter(',')->check(CLI::Range(std::int64_t{1}, cc::kMaxAffinityClasses));
  affinity->add_option("--rho", aff_rho, "detection probabilities")->delimiter(',')->check(CLI::Range(0.0, 1.0));
  affinity->add_option("--alpha", aff_alpha, "level")->check(CLI::Range(0.0, 1.0));

  // demo-discontinuity
  std::vector<double> demo_s{0.1, 0.01, 0.001, 0.0001};
  std::vector<double> demo_atoms{std::log(2.0)};
  std::vector<double> demo_weights{1.0};
  auto* demo = app.add_subcommand("demo-discontinuity", "contamination trace Q_s = (1 - s) Q + s delta(s^2)");
  demo->add_option("--s", demo_s, "decreasing values in (0, 1)")->delimiter(',');
  demo->add_option("--atoms", demo_atoms, "atoms of Q")->delimiter(',');
  demo->add_option("--weights", demo_weights, "weights of Q")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (analyze->parsed()) {
      const auto data = load(analyze_in);
      acfg.envelope = analyze->count("--no-envelope") == 0;
      acfg.envelope_cfg.seed = seed;
      acfg.envelope_cfg.threads = threads;
      acfg.bootstrap = analyze_b > 0;
      if (analyze_b > 0) acfg.bootstrap_cfg.replicates = analyze_b;
      acfg.bootstrap_cfg.seed = seed;
      acfg.bootstrap_cfg.threads = threads;
      acfg.bootstrap_cfg.plugin = parse_plugin(analyze_plugin);
      acfg.bootstrap_cfg.keep_replicates = !analyze_dump.empty();
      const auto report = cc::analyze(data, acfg);
      const auto j = cc::to_json(report);
      emit(j, config_line(j["config"]) + cc::render_table(report), format, json_path);
      if (report.bootstrap && !analyze_dump.empty()) write_replicates_csv(*report.bootstrap, analyze_dump);
      return report.degraded() ? kExitDegraded : 0;
    }

    if (envelope->parsed()) {
      const auto data = load(env_in);
      ecfg.seed = seed;
      ecfg.threads = threads;
      const double eps = fixed_eps > 0.0 ? fixed_eps : cc::kolmogorov_quantile(data.n(), ecfg.alpha, ecfg.reps, seed, threads);
      const auto sol = cc::solve_lp(cc::build_lp(data, eps, cc::envelope_grid(data, ecfg)));
      nlohmann::json j = {{"n", data.n()},
                          {"epsilon", eps},
                          {"epsilon_source", fixed_eps > 0.0 ? "fixed" : "monte_carlo"},
                          {"status", cc::to_string(sol.status)},
                          {"config",
                           {{"alpha", ecfg.alpha}, {"reps", ecfg.reps}, {"seed", seed}, {"grid_size", ecfg.grid_size},
                            {"grid_lo", ecfg.grid_lo}, {"grid_hi", ecfg.grid_hi}, {"rng", cc::kRngAlgorithm},
                            {"version", cc::kVersion}}}};
      std::ostringstream text;
      text << config_line(j["config"]);
      char buf[128];
      std::snprintf(buf, sizeof buf, "n = %lld  eps_n = %.3f  status = %s\n", static_cast<long long>(data.n()), eps,
                    cc::to_string(sol.status));
      text << buf;
      if (sol.feasible) {
        const auto c_lower = static_cast<std::int64_t>(std::floor(static_cast<double>(data.n()) * (1.0 + sol.theta_lower)));
        j["theta_lower"] = sol.theta_lower;
        j["c_lower"] = c_lower;
        j["atoms"] = std::vector<double>(sol.q.atoms().begin(), sol.q.atoms().end());
        j["weights"] = std::vector<double>(sol.q.weights().begin(), sol.q.weights().end());
        std::snprintf(buf, sizeof buf, "theta_lower = %.3f  c >= %lld\n", sol.theta_lower, static_cast<long long>(c_lower));
        text << buf;
      }
      emit(j, text.str(), format, json_path);
      return sol.feasible ? 0 : kExitDegraded;
    }

    if (bootstrap->parsed()) {
      const auto data = load(boot_in);
      bcfg.seed = seed;
      bcfg.threads = threads;
      bcfg.plugin = parse_plugin(boot_plugin);
      bcfg.keep_replicates = !boot_dump.empty();
      const auto fit = cc::fit_npmle(data);
      const auto s = cc::bootstrap_quantiles(fit.q, data.n(), bcfg);
      auto j = cc::bootstrap_json(s);
      j["version"] = cc::kVersion;
      j["k_max"] = bcfg.k_max;
      j["unconditional"] = bcfg.unconditional;
      std::ostringstream text;
      text << config_line({{"replicates", s.replicates}, {"seed", s.seed}, {"alpha_q", s.alpha_q}, {"plugin", s.plugin},
                           {"k_max", bcfg.k_max}, {"unconditional", bcfg.unconditional}, {"rng", s.rng},
                           {"version", cc::kVersion}});
      bool flagged = false;
      for (const auto& e : s.estimators) {
        char q[32] = "";
        if (e.quantile) std::snprintf(q, sizeof q, "%.3f", *e.quantile);
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-10s %10s  missing %d%s\n", e.name.c_str(), q, e.missing,
                      e.flagged ? "  (flagged)" : "");
        text << buf;
        flagged = flagged || e.flagged;
      }
      emit(j, text.str(), format, json_path);
      if (!boot_dump.empty()) write_replicates_csv(s, boot_dump);
      return flagged || !fit.converged ? kExitDegraded : 0;
    }

    if (simulate->parsed()) {
      if (sim_atoms.size() != sim_weights.size()) throw CLI::ValidationError("--atoms and --weights differ in length");
      const cc::PopulationModel model{sim_c, cc::MixingDistribution(sim_atoms, sim_weights).normalized()};
      cc::Rng rng(seed);
      const auto sample = cc::sample_population(model, rng);
      std::ostringstream text;
      text << "# simulate --c " << sim_c << " --atoms " << join(sim_atoms) << " --weights " << join(sim_weights)
           << " --seed " << seed << "  (" << cc::kRngAlgorithm << ", version " << cc::kVersion << ")\n";
      text << "# n = " << sample.n << "  n0 = " << sample.n0 << "\n";
      if (sample.data)
        for (const auto& [x, nx] : sample.data->counts()) text << x << ' ' << nx << '\n';
      if (sim_out.empty()) {
        std::cout << text.str();
      } else {
        std::ofstream out(sim_out);
        if (!out) throw std::runtime_error("cannot write " + sim_out);
        out << text.str();
      }
      return sample.data ? 0 : kExitDegraded;
    }

    if (affinity->parsed()) {
      const nlohmann::json cfg{{"c", aff_c}, {"rho", aff_rho}, {"alpha", aff_alpha}, {"version", cc::kVersion}};
      std::cout << "# " << config_line(cfg) << "c,rho,affinity,floor,affinity_minus_alpha\n";
      std::cout.precision(10);
      for (auto c : aff_c) {
        for (double rho : aff_rho) {
          const auto r = cc::affinity_result(c, rho, aff_alpha);
          std::cout << r.c << ',' << r.rho << ',' << r.affinity << ',';
          if (rho < 1.0) std::cout << r.floor_bound;
          std::cout << ',' << r.infinite_ucl_lower_bound << '\n';
        }
      }
      return 0;
    }

    if (demo->parsed()) {
      if (demo_atoms.size() != demo_weights.size()) throw CLI::ValidationError("--atoms and --weights differ in length");
      const auto trace = cc::blowup_trace(cc::MixingDistribution(demo_atoms, demo_weights).normalized(), demo_s);
      const nlohmann::json cfg{
          {"s", demo_s}, {"atoms", demo_atoms}, {"weights", demo_weights}, {"tail_tol", cc::kDistanceTailTol},
          {"version", cc::kVersion}};
      std::cout << "# " << config_line(cfg);
      std::cout << "s,pi,eta,theta,theta_closed_form,tv_lower,tv_upper,two_pi,hellinger_lower,hellinger_upper,truncation\n";
      std::cout.precision(10);
      for (const auto& row : trace.rows)
        std::cout << row.s << ',' << row.pi << ',' << row.eta << ',' << row.theta_mixed << ',' << row.theta_closed_form
                  << ',' << row.tv.lower << ',' << row.tv.upper << ',' << row.tv_bound << ',' << row.hellinger.lower
                  << ',' << row.hellinger.upper << ',' << row.tv.truncation << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
