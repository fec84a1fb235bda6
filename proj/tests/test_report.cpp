#include <gtest/gtest.h>

#include "support.hpp"

namespace cc = classcount;
using cc::testing::cholera;

namespace {

cc::AnalysisConfig quick() {
  cc::AnalysisConfig cfg;
  cfg.envelope_cfg.reps = 20000;
  return cfg;
}

std::string three(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

TEST(Report, CholeraTable) {
  const auto r = cc::analyze(cholera(), quick());
  EXPECT_NEAR(*r.empirical.theta_dr, 0.593, 0.0005);
  EXPECT_NEAR(*r.empirical.theta_cl, 0.544, 0.0005);
  EXPECT_NEAR(*r.empirical.theta_cb, 0.484, 0.0005);
  ASSERT_EQ(r.empirical.ladder.size(), 1u);
  EXPECT_NEAR(r.empirical.ladder[0], 0.582, 0.0005);
  EXPECT_EQ(r.headline, "npmle_theta_1");
  EXPECT_EQ(r.pseudo_mle.at(r.headline), 88);
  EXPECT_EQ(r.pseudo_mle.at("chao1"), 87);
  ASSERT_TRUE(r.envelope);
  EXPECT_GE(r.envelope->c_lower, 68);
  EXPECT_FALSE(r.degraded());

  const auto table = cc::render_table(r);
  for (const char* cell : {"0.593", "0.544", "0.484", "0.582", "0.608"}) EXPECT_NE(table.find(cell), std::string::npos);
}

TEST(Report, PluginLadderCarriesForward) {
  const auto r = cc::analyze(cholera(), quick());
  ASSERT_EQ(r.npmle_plugin.ladder.size(), 8u);
  for (double v : r.npmle_plugin.ladder) EXPECT_NEAR(v, 0.608, 0.0005);
  const auto row = r.empirical.as_vector(8);
  ASSERT_EQ(row.size(), 11u);
  EXPECT_TRUE(row[3].has_value());
  EXPECT_FALSE(row[4].has_value());
}

TEST(Report, JsonAndTableAgree) {
  const auto r = cc::analyze(cholera(), quick());
  const auto j = cc::to_json(r);
  const auto table = cc::render_table(r);
  const auto& emp = j["estimates"]["empirical"];
  for (const char* key : {"theta_DR", "theta_CL", "theta_CB"})
    EXPECT_NE(table.find(three(emp[key].get<double>())), std::string::npos) << key;
  EXPECT_NE(table.find(three(j["envelope"]["theta_lower"].get<double>())), std::string::npos);
  EXPECT_EQ(j["dataset"]["n"], 55);
  EXPECT_EQ(j["dataset"]["S"], 86);
  EXPECT_EQ(j["dataset"]["counts"]["1"], 32);
  EXPECT_EQ(j["pseudo_mle"]["npmle_theta_1"], 88);
  EXPECT_EQ(j["npmle"]["chi"], 1);
  EXPECT_TRUE(j["bootstrap"].is_null());
  EXPECT_EQ(j["config"]["version"], cc::kVersion);
  EXPECT_EQ(j["config"]["rng"], cc::kRngAlgorithm);
}

TEST(Report, RerunFromEchoedConfigIsIdentical) {
  auto cfg = quick();
  cfg.bootstrap = true;
  cfg.bootstrap_cfg.replicates = 12;
  cfg.k_max = 3;
  const auto first = cc::to_json(cc::analyze(cholera(), cfg));

  const auto& echo = first["config"];
  cc::AnalysisConfig again;
  again.k_max = echo["k_max"];
  again.headline_k = echo["headline_k"];
  again.npmle.init_grid_size = echo["npmle"]["init_grid_size"];
  again.npmle.init_grid_lo = echo["npmle"]["init_grid_lo"];
  again.npmle.init_em_sweeps = echo["npmle"]["init_em_sweeps"];
  again.npmle.scan_points = echo["npmle"]["scan_points"];
  again.npmle.scan_lo = echo["npmle"]["scan_lo"];
  again.npmle.tol = echo["npmle"]["tol"];
  again.npmle.max_outer = echo["npmle"]["max_outer"];
  again.npmle.max_newton = echo["npmle"]["max_newton"];
  again.npmle.merge_rel = echo["npmle"]["merge_rel"];
  again.npmle.min_atom = echo["npmle"]["min_atom"];
  again.envelope = echo["envelope"]["enabled"];
  again.envelope_cfg.grid_size = echo["envelope"]["grid_size"];
  again.envelope_cfg.grid_lo = echo["envelope"]["grid_lo"];
  again.envelope_cfg.grid_hi = echo["envelope"]["grid_hi"];
  again.envelope_cfg.alpha = echo["envelope"]["alpha"];
  again.envelope_cfg.reps = echo["envelope"]["reps"];
  again.envelope_cfg.seed = echo["envelope"]["seed"];
  again.bootstrap = echo["bootstrap"]["enabled"];
  again.bootstrap_cfg.replicates = echo["bootstrap"]["replicates"];
  again.bootstrap_cfg.alpha_q = echo["bootstrap"]["alpha_q"];
  again.bootstrap_cfg.seed = echo["bootstrap"]["seed"];
  again.bootstrap_cfg.unconditional = echo["bootstrap"]["unconditional"];
  again.bootstrap_cfg.plugin = echo["bootstrap"]["plugin"] == "npmle" ? cc::PlugIn::npmle : cc::PlugIn::empirical;
  again.bootstrap_cfg.threads = 2;  // not part of the echo: results do not depend on it

  EXPECT_EQ(cc::to_json(cc::analyze(cholera(), again)).dump(), first.dump());
}

TEST(Report, DegenerateDataIsFlagged) {
  auto cfg = quick();
  cfg.envelope = false;
  const auto r = cc::analyze(cc::FrequencyData(cc::FrequencyData::Counts{{1, 5}}), cfg);
  EXPECT_TRUE(r.degraded());
  EXPECT_FALSE(r.empirical.theta_dr.has_value());
  EXPECT_EQ(r.pseudo_mle.count("chao1"), 0u);
  const auto j = cc::to_json(r);
  EXPECT_TRUE(j["estimates"]["empirical"]["theta_DR"].is_null());
  EXPECT_FALSE(j["diagnostics"].empty());
}

TEST(Report, RejectsBadLadderCap) {
  auto cfg = quick();
  cfg.k_max = 9;
  EXPECT_THROW(cc::analyze(cholera(), cfg), cc::DomainError);
  cfg.k_max = 0;
  EXPECT_THROW(cc::analyze(cholera(), cfg), cc::DomainError);
}
