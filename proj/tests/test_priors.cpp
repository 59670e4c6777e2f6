#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <nlohmann/json.hpp>

#include "picsurv/picsurv.hpp"

using namespace picsurv;

namespace {

const ParamLayout kCervical{Model::PIC, 2, 1};

// Written out independently of numeric.hpp.
double gauss_logpdf(double x, double mu, double sd) {
  const double z = (x - mu) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace

TEST(Elicitation, CervicalQuantilesGiveInformativeHyperparameters) {
  const auto m = lognormal_from_quantiles(15.5 / 12.0, 34.0 / 12.0);
  EXPECT_NEAR(m.mu, 0.5 * (std::log(15.5 / 12.0) + std::log(34.0 / 12.0)), 1e-15);
  EXPECT_NEAR(m.mu, 0.6488, 2e-4);  // quoted value is rounded
  EXPECT_NEAR(m.mu, std::log(23.0 / 12.0), 0.01);
  EXPECT_NEAR(m.sigma, 0.2004, 1e-4);
  const auto a = lognormal_from_quantiles(1.64, 2.43);
  EXPECT_NEAR(a.mu, 0.6913, 1e-4);
  EXPECT_NEAR(a.mu, std::log(2.0), 0.01);
  EXPECT_NEAR(a.sigma, 0.1003, 1e-4);
  const auto unit = lognormal_from_quantiles(std::exp(-kZ975), std::exp(kZ975));
  EXPECT_NEAR(unit.mu, 0.0, 1e-15);
  EXPECT_NEAR(unit.sigma, 1.0, 1e-15);
}

TEST(Elicitation, RoundTripsThroughQuantiles) {
  RandomStream rng(12, 0);
  for (int i = 0; i < 500; ++i) {
    const double lo = std::exp(rng.normal(0, 2));
    const double hi = lo * std::exp(std::abs(rng.normal(0, 2)) + 1e-3);
    const auto s = lognormal_from_quantiles(lo, hi);
    EXPECT_GT(s.sigma, 0.0);
    EXPECT_NEAR(s.quantile_low() / lo, 1.0, 1e-9);
    EXPECT_NEAR(s.quantile_high() / hi, 1.0, 1e-9);
  }
}

TEST(Elicitation, RejectsBadQuantiles) {
  EXPECT_THROW(lognormal_from_quantiles(2.0, 2.0), QuantileOrder);
  EXPECT_THROW(lognormal_from_quantiles(3.0, 2.0), QuantileOrder);
  EXPECT_THROW(lognormal_from_quantiles(0.0, 2.0), QuantileOrder);
  EXPECT_THROW(lognormal_from_quantiles(-1.0, 2.0), QuantileOrder);
}

TEST(Elicitation, RatioPriorsBecomeInterceptPriors) {
  const auto [pi, delta] = ratio_priors_to_intercepts({0.0, 1.0}, {0.3, 0.7});
  EXPECT_EQ(pi.mu, 0.0);
  EXPECT_EQ(pi.sigma, 1.0);
  EXPECT_EQ(delta.mu, 0.3);
  EXPECT_EQ(delta.sigma, 0.7);
  // DMO ratio interval: the location matches the published -1.84. The scale
  // follows from the quantile formula and is 0.587, not the published 0.41.
  const auto r = lognormal_from_quantiles(0.05, 0.5);
  const auto [bp, bd] = ratio_priors_to_intercepts(r, r);
  EXPECT_NEAR(bp.mu, -1.84, 0.01);
  EXPECT_NEAR(bd.mu, -1.84, 0.01);
  EXPECT_NEAR(bp.sigma, std::log(10.0) / (2.0 * kZ975), 1e-12);
  EXPECT_NEAR(bp.sigma, 0.5874, 1e-4);
}

TEST(Presets, InformativeMatchesPublishedValues) {
  const auto s = preset(Preset::InformativeCervical);
  EXPECT_EQ(s.alpha.mu, std::log(2.0));
  EXPECT_EQ(s.alpha.sigma, 0.1);
  EXPECT_EQ(s.median_time.mu, std::log(23.0 / 12.0));
  EXPECT_EQ(s.median_time.sigma, 0.2);
  ASSERT_EQ(s.beta_pi.size(), 2u);
  ASSERT_EQ(s.beta_delta.size(), 2u);
  ASSERT_EQ(s.gamma.size(), 1u);
  EXPECT_EQ(s.beta_pi[0].mu, -0.07);
  EXPECT_EQ(s.beta_pi[0].sigma, 0.31);
  EXPECT_EQ(s.beta_pi[1].mu, -0.89);
  EXPECT_EQ(s.beta_pi[1].sigma, 0.33);
  EXPECT_EQ(s.beta_delta[0].mu, 1.69);
  EXPECT_EQ(s.beta_delta[0].sigma, 0.22);
  EXPECT_EQ(s.beta_delta[1].mu, 0.0);
  EXPECT_EQ(s.beta_delta[1].sigma, 0.05);
  EXPECT_EQ(s.gamma[0].mu, -0.69);
  EXPECT_EQ(s.gamma[0].sigma, 0.1);
  EXPECT_EQ(s.time_unit, "years");
}

TEST(Presets, VagueMatchesPublishedValues) {
  const auto s = preset(Preset::VagueCervical);
  EXPECT_EQ(s.alpha.mu, 0.0);
  EXPECT_EQ(s.alpha.sigma, 1.0);
  EXPECT_EQ(s.median_time.mu, std::log(2.0));
  EXPECT_EQ(s.median_time.sigma, 1.0);
  for (const auto* v : {&s.beta_pi, &s.beta_delta, &s.gamma}) {
    for (const auto& n : *v) {
      EXPECT_EQ(n.mu, 0.0);
      EXPECT_EQ(n.sigma, 1.0);
    }
  }
}

TEST(Presets, MisspecifiedMatchesPublishedValues) {
  const auto s = preset(Preset::MisspecifiedCervical);
  EXPECT_EQ(s.alpha.mu, 0.0);
  EXPECT_EQ(s.alpha.sigma, 0.31);
  EXPECT_EQ(s.median_time.mu, std::log(2.0));
  EXPECT_EQ(s.median_time.sigma, 0.03);
  for (const auto* v : {&s.beta_pi, &s.beta_delta}) {
    ASSERT_EQ(v->size(), 2u);
    for (const auto& n : *v) {
      EXPECT_EQ(n.mu, 0.0);
      EXPECT_EQ(n.sigma, 0.31);
    }
  }
  EXPECT_EQ(s.gamma[0].mu, 0.0);
  EXPECT_EQ(s.gamma[0].sigma, 0.26);
}

TEST(Presets, NamesParseAndUnknownIsRejected) {
  for (Preset p : {Preset::InformativeCervical, Preset::VagueCervical, Preset::MisspecifiedCervical}) {
    EXPECT_EQ(parse_preset(preset_name(p)), p);
  }
  EXPECT_EQ(parse_preset("VagueCervical"), Preset::VagueCervical);
  EXPECT_THROW(parse_preset("flat"), ConfigError);
}

TEST(PriorDensity, MaximumAtPriorMeans) {
  const auto s = preset(Preset::InformativeCervical);
  const auto pri = sampling_scale_priors(s, kCervical);
  std::vector<double> theta;
  double expect = 0.0;
  for (const auto& n : pri) {
    theta.push_back(n.mu);
    expect -= std::log(n.sigma * std::sqrt(2.0 * std::numbers::pi));
  }
  EXPECT_NEAR(log_prior_density(theta, s, kCervical), expect, 1e-12);
}

TEST(PriorDensity, OneSdShiftLowersByHalf) {
  const auto s = preset(Preset::MisspecifiedCervical);
  const auto pri = sampling_scale_priors(s, kCervical);
  std::vector<double> theta;
  for (const auto& n : pri) theta.push_back(n.mu);
  const double top = log_prior_density(theta, s, kCervical);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    for (double sign : {-1.0, 1.0}) {
      auto t = theta;
      t[i] += sign * pri[i].sigma;
      EXPECT_NEAR(top - log_prior_density(t, s, kCervical), 0.5, 1e-12) << i;
    }
  }
}

TEST(PriorDensity, VagueAtTruthMatchesScalarOracle) {
  const auto s = preset(Preset::VagueCervical);
  const PicParameters t = cervical_truth();
  const auto theta = to_sampling_scale(t, kCervical);
  double oracle = gauss_logpdf(std::log(2.0), 0.0, 1.0);
  oracle += gauss_logpdf(std::log(2.2 * std::sqrt(std::log(2.0))), std::log(2.0), 1.0);
  for (double b : t.beta_pi) oracle += gauss_logpdf(b, 0.0, 1.0);
  for (double b : t.beta_delta) oracle += gauss_logpdf(b, 0.0, 1.0);
  oracle += gauss_logpdf(t.gamma[0], 0.0, 1.0);
  EXPECT_NEAR(log_prior_density(theta, s, kCervical), oracle, 1e-12);
  EXPECT_TRUE(std::isfinite(log_prior_density(std::vector<double>(7, 40.0), s, kCervical)));
}

TEST(PriorDensity, DimensionChecks) {
  const auto s = preset(Preset::VagueCervical);
  EXPECT_THROW(log_prior_density(std::vector<double>(6, 0.0), s, kCervical), DimensionMismatch);
  EXPECT_THROW(sampling_scale_priors(s, ParamLayout{Model::PIC, 3, 1}), DimensionMismatch);
  EXPECT_THROW(sampling_scale_priors(s, ParamLayout{Model::PIC, 2, 2}), DimensionMismatch);
  // PI layout ignores the cure-side priors
  const ParamLayout pi{Model::PI, 2, 1};
  EXPECT_EQ(sampling_scale_priors(for_model(s, Model::PI), pi).size(), 5u);
}

TEST(PriorDraws, MatchPriorMoments) {
  const auto s = preset(Preset::InformativeCervical);
  const auto pri = sampling_scale_priors(s, kCervical);
  RandomStream rng(4, 0);
  const int n = 40000;
  std::vector<double> sum(pri.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const auto th = draw_from_prior(s, kCervical, rng);
    for (std::size_t k = 0; k < th.size(); ++k) sum[k] += th[k];
  }
  for (std::size_t k = 0; k < pri.size(); ++k) {
    EXPECT_NEAR(sum[k] / n, pri[k].mu, 4.0 * pri[k].sigma / std::sqrt(n)) << k;
  }
}

TEST(PriorJson, RoundTripAndErrors) {
  for (Preset p : {Preset::InformativeCervical, Preset::VagueCervical, Preset::MisspecifiedCervical}) {
    const auto s = preset(p);
    const nlohmann::json j = s;
    const auto back = nlohmann::json::parse(j.dump()).get<PicPriorSpec>();
    EXPECT_EQ(nlohmann::json(back), j);
    EXPECT_EQ(back.median_time.mu, s.median_time.mu);
  }
  auto j = nlohmann::json(preset(Preset::VagueCervical));
  j["alpha"]["sigma"] = 0.0;
  EXPECT_THROW(j.get<PicPriorSpec>(), ConfigError);
  j = nlohmann::json(preset(Preset::VagueCervical));
  j.erase("median_time");
  EXPECT_THROW(j.get<PicPriorSpec>(), nlohmann::json::exception);
}
