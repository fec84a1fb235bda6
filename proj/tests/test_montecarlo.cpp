#include <gtest/gtest.h>

#include "support.hpp"

namespace cc = classcount;
namespace ct = classcount::testing;
using ct::cholera;

TEST(Rng, StreamsAreReproducible) {
  cc::Rng a(42);
  cc::Rng b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
  EXPECT_NE(cc::derive_seed(1, 0), cc::derive_seed(1, 1));
  EXPECT_NE(cc::derive_seed(1, 0), cc::derive_seed(2, 0));
}

TEST(Rng, PoissonMoments) {
  cc::Rng rng(1);
  for (double lambda : {0.3, 4.0, 37.5}) {
    const int n = 40000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(rng.poisson(lambda));
      s += x;
      s2 += x * x;
    }
    const double mean = s / n;
    EXPECT_NEAR(mean, lambda, 4.0 * std::sqrt(lambda / n)) << lambda;
    EXPECT_NEAR(s2 / n - mean * mean, lambda, 0.05 * lambda) << lambda;
  }
  EXPECT_EQ(rng.poisson(0.0), 0);
}

TEST(Sampler, EveryClassDetectedAtHighRate) {
  const cc::PopulationModel model{100, cc::MixingDistribution::point(10.0)};
  int full = 0;
  for (std::uint64_t s = 0; s < 400; ++s) {
    cc::Rng rng(cc::derive_seed(11, s));
    const auto sample = cc::sample_population(model, rng);
    EXPECT_EQ(sample.n + sample.n0, 100);
    if (sample.n == 100) ++full;
  }
  // P(n = 100) = (1 - e^{-10})^100 > 0.995.
  EXPECT_GE(full, 390);
}

TEST(Sampler, DetectedFraction) {
  const cc::PopulationModel model{100000, cc::MixingDistribution::point(1.0)};
  cc::Rng rng(3);
  const auto sample = cc::sample_population(model, rng);
  EXPECT_NEAR(static_cast<double>(sample.n) / 1e5, 1.0 - std::exp(-1.0), 0.005);
  EXPECT_NEAR(model.detection_probability(), 1.0 - std::exp(-1.0), 1e-15);
}

TEST(Sampler, SameSeedSameData) {
  const cc::PopulationModel model{1000, cc::MixingDistribution({1.0, 3.0}, {0.5, 0.5})};
  cc::Rng a(7);
  cc::Rng b(7);
  const auto x = cc::sample_population(model, a);
  const auto y = cc::sample_population(model, b);
  ASSERT_TRUE(x.data && y.data);
  EXPECT_EQ(*x.data, *y.data);
  cc::Rng c(8);
  EXPECT_NE(*x.data, *cc::sample_population(model, c).data);
}

TEST(Sampler, EmptySample) {
  const cc::PopulationModel model{3, cc::MixingDistribution::point(1e-9)};
  cc::Rng rng(1);
  const auto s = cc::sample_population(model, rng);
  EXPECT_FALSE(s.data.has_value());
  EXPECT_EQ(s.n0, 3);
  EXPECT_THROW(cc::sample_population({0, cc::MixingDistribution::point(1.0)}, rng), cc::DomainError);
}

TEST(Sampler, TruncatedMean) {
  cc::Rng rng(19);
  const double lambda = 5.0;
  const auto d = cc::sample_truncated(cc::MixingDistribution::point(lambda), 10000, rng);
  const double p = -std::expm1(-lambda);
  const double mean = lambda / p;
  const double var = (lambda + lambda * lambda) / p - mean * mean;
  EXPECT_NEAR(static_cast<double>(d.S()) / 1e4, mean, 3.0 * std::sqrt(var / 1e4));
}

TEST(Sampler, SingleDraw) {
  cc::Rng rng(2);
  const auto d = cc::sample_truncated(cc::MixingDistribution::point(2.0), 1, rng);
  EXPECT_EQ(d.n(), 1);
  EXPECT_EQ(d.counts().size(), 1u);
  EXPECT_THROW(cc::sample_truncated(cc::MixingDistribution::point(2.0), 0, rng), cc::DomainError);
}

TEST(Sampler, ChiSquareGoodnessOfFit) {
  const cc::MixingDistribution q({0.4, 2.5, 20.0}, {0.5, 0.4, 0.1});
  cc::Rng rng(101);
  const int n = 100000;
  const auto d = cc::sample_truncated(q, n, rng);
  // Cells x = 1..K with expected count >= 5, then the pooled tail.
  double stat = 0.0;
  double cum = 0.0;
  std::int64_t seen = 0;
  int cells = 0;
  for (int x = 1;; ++x) {
    long double p = 0.0L;
    for (std::size_t j = 0; j < q.size(); ++j) p += q.weights()[j] * ct::ztp(q.atoms()[j], x);
    if (n * (1.0 - cum - static_cast<double>(p)) < 5.0) break;
    const double e = n * static_cast<double>(p);
    const double o = static_cast<double>(d.count(x));
    stat += (o - e) * (o - e) / e;
    cum += static_cast<double>(p);
    seen += d.count(x);
    ++cells;
  }
  const double e_tail = n * (1.0 - cum);
  const double o_tail = static_cast<double>(n - seen);
  stat += (o_tail - e_tail) * (o_tail - e_tail) / e_tail;
  // Wilson-Hilferty 99% point with cells degrees of freedom.
  const double df = cells;
  const double z = 2.3263478740408408;
  const double crit = df * std::pow(1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df)), 3.0);
  EXPECT_GT(cells, 10);
  EXPECT_LT(stat, crit);
}

TEST(Quantile, LinearInterpolation) {
  EXPECT_EQ(cc::quantile({3.0}, 0.05), 3.0);
  EXPECT_NEAR(cc::quantile({4.0, 1.0, 3.0, 2.0}, 0.05), 1.0 + 0.15, 1e-15);
  EXPECT_EQ(cc::quantile({1.0, 2.0}, 0.0), 1.0);
  EXPECT_EQ(cc::quantile({1.0, 2.0}, 1.0), 2.0);
  EXPECT_THROW(cc::quantile({}, 0.5), cc::DomainError);
  EXPECT_THROW(cc::quantile({1.0}, 1.5), cc::DomainError);
}

TEST(Bootstrap, SingleReplicate) {
  const auto fit = cc::fit_npmle(cholera());
  cc::BootstrapConfig cfg;
  cfg.replicates = 1;
  cfg.k_max = 2;
  cfg.keep_replicates = true;
  const auto s = cc::bootstrap_quantiles(fit.q, 55, cfg);
  for (const auto& e : s.estimators) {
    if (!e.quantile) continue;
    ASSERT_EQ(e.replicates.size(), 1u);
    EXPECT_EQ(*e.quantile, e.replicates[0]);
  }
}

TEST(Bootstrap, QuantilesLieWithinReplicates) {
  const auto fit = cc::fit_npmle(cholera());
  cc::BootstrapConfig cfg;
  cfg.replicates = 60;
  cfg.k_max = 3;
  cfg.keep_replicates = true;
  for (auto plugin : {cc::PlugIn::npmle, cc::PlugIn::empirical}) {
    cfg.plugin = plugin;
    const auto s = cc::bootstrap_quantiles(fit.q, 55, cfg);
    EXPECT_EQ(s.plugin, cc::to_string(plugin));
    EXPECT_EQ(s.estimators.size(), 6u);
    for (const auto& e : s.estimators) {
      EXPECT_EQ(static_cast<int>(e.replicates.size()) + e.missing, 60);
      if (!e.quantile) continue;
      const auto [lo, hi] = std::minmax_element(e.replicates.begin(), e.replicates.end());
      EXPECT_GE(*e.quantile, *lo);
      EXPECT_LE(*e.quantile, *hi);
    }
  }
}

TEST(Bootstrap, EmpiricalPluginMarksShortLadders) {
  // Cholera-sized resamples rarely support theta_3.
  const auto fit = cc::fit_npmle(cholera());
  cc::BootstrapConfig cfg;
  cfg.replicates = 50;
  cfg.k_max = 3;
  cfg.plugin = cc::PlugIn::empirical;
  const auto s = cc::bootstrap_quantiles(fit.q, 55, cfg);
  EXPECT_GT(s.estimators.back().missing, 25);
  EXPECT_TRUE(s.estimators.back().flagged);
}

TEST(Bootstrap, ThreadCountDoesNotChangeResults) {
  const auto fit = cc::fit_npmle(cholera());
  cc::BootstrapConfig cfg;
  cfg.replicates = 24;
  cfg.k_max = 2;
  cfg.keep_replicates = true;
  cfg.threads = 1;
  const auto one = cc::bootstrap_quantiles(fit.q, 55, cfg);
  cfg.threads = 3;
  const auto three = cc::bootstrap_quantiles(fit.q, 55, cfg);
  for (std::size_t e = 0; e < one.estimators.size(); ++e) {
    EXPECT_EQ(one.estimators[e].replicates, three.estimators[e].replicates);
    EXPECT_EQ(one.estimators[e].quantile, three.estimators[e].quantile);
  }
}

TEST(Bootstrap, UnconditionalSizesVary) {
  const auto fit = cc::fit_npmle(cholera());
  cc::BootstrapConfig cfg;
  cfg.replicates = 30;
  cfg.k_max = 1;
  cfg.unconditional = true;
  cfg.plugin = cc::PlugIn::empirical;
  cfg.keep_replicates = true;
  const auto s = cc::bootstrap_quantiles(fit.q, 55, cfg);
  EXPECT_EQ(s.estimators[3].missing, 0);
  EXPECT_EQ(s.estimators[3].replicates.size(), 30u);
}

TEST(Bootstrap, CholeraFirstRungQuantile) {
  const auto fit = cc::fit_npmle(cholera());
  cc::BootstrapConfig cfg;
  cfg.k_max = 1;
  const auto s = cc::bootstrap_quantiles(fit.q, 55, cfg);
  ASSERT_TRUE(s.estimators[3].quantile);
  EXPECT_NEAR(*s.estimators[3].quantile, 0.412, 0.04);
}

TEST(Bootstrap, DeltaSeMatchesResampleSpread) {
  // Spread of theta_1-hat over resamples of the fitted model versus the delta method at f_n.
  const auto d = cholera();
  const auto fit = cc::fit_npmle(d);
  cc::BootstrapConfig cfg;
  cfg.replicates = 4000;
  cfg.k_max = 1;
  cfg.plugin = cc::PlugIn::empirical;
  cfg.keep_replicates = true;
  const auto s = cc::bootstrap_quantiles(fit.q, d.n(), cfg);
  const auto& r = s.estimators[3].replicates;
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  double var = 0.0;
  for (double v : r) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(r.size() - 1));
  // theta_1-hat = f1^2 / 2 f2 has a long right tail at n = 55, which inflates the SD
  // about 30% over the linearization. The interquartile scale is the fair comparison.
  const double iqr_scale = (cc::quantile(r, 0.75) - cc::quantile(r, 0.25)) / 1.3489795;
  EXPECT_NEAR(cc::delta_se(d, 1) / iqr_scale, 1.0, 0.15);
  EXPECT_GT(sd, cc::delta_se(d, 1));
}

TEST(Coverage, WilsonInterval) {
  const auto r = cc::coverage_summary(100, 95);
  EXPECT_EQ(r.rate, 0.95);
  EXPECT_LT(r.wilson_lo, 0.95);
  EXPECT_GT(r.wilson_hi, 0.95);
  EXPECT_NEAR(r.wilson_lo, 0.8882, 1e-4);
  EXPECT_NEAR(r.wilson_hi, 0.9785, 1e-4);
}

TEST(Coverage, TrivialCountLimit) {
  const cc::PopulationModel model{200, cc::MixingDistribution({0.2, 2.0}, {0.5, 0.5})};
  const auto r = cc::count_lower_coverage(model, 200, 4);
  EXPECT_EQ(r.rate, 1.0);
}

TEST(Coverage, FirstRungIsNotAnUpperLimit) {
  // Heavy mass near zero keeps theta_1-hat far below the odds.
  const cc::MixingDistribution q({0.02, 1.0, 4.0}, {0.3, 0.4, 0.3});
  const auto r = cc::ladder_upper_coverage(q, 200, 1, 200, 6);
  EXPECT_LT(r.rate, 0.95);
}

TEST(Coverage, EnvelopeIsConservative) {
  const cc::MixingDistribution q({0.3, 2.5}, {0.5, 0.5});
  const auto r = cc::envelope_coverage(q, 200, 500, 1234);
  EXPECT_GE(r.rate, 0.95);
}
