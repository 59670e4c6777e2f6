#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "picsurv/picsurv.hpp"

using namespace picsurv;

namespace {

std::vector<ObservationRecord> cohort(std::size_t n, std::uint64_t seed, bool cure = true) {
  DgpConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  if (!cure) cfg.truth.beta_delta = {-1000.0, 0.0};  // exp underflows: delta is exactly 0
  return simulate_cohort(cfg).records;
}

const SummaryContext kCtx{{{"strain16", {1.0, 0.0}, {0.0}}}, {2.0, 10.0}};

}  // namespace

TEST(PiMle, RecoversTruthWithoutCure) {
  const auto data = cohort(4000, 41, false);
  const auto fit = fit_pi_mle(data);
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.point.alpha, 2.0, 0.1);
  EXPECT_NEAR(fit.point.lambda, 2.2, 0.15);
  EXPECT_NEAR(fit.point.gamma[0], -0.5, 0.15);
  EXPECT_TRUE(fit.point.beta_delta.empty());
  EXPECT_EQ(fit.theta.size(), 5u);
  for (double s : fit.se) EXPECT_GT(s, 0.0);
}

TEST(PiMle, OptimumIsALocalMaximum) {
  const auto data = cohort(400, 42);
  const auto fit = fit_pi_mle(data);
  ASSERT_TRUE(fit.converged);
  const ParamLayout lay = fit.layout;
  EXPECT_NEAR(fit.loglik, log_likelihood_observed(data, fit.point, Model::PI), 1e-9);
  RandomStream rng(7, 0);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> dir(fit.theta.size());
    double norm = 0.0;
    for (double& d : dir) norm += (d = rng.normal()) * d;
    auto th = fit.theta;
    for (std::size_t i = 0; i < th.size(); ++i) th[i] += 0.1 * dir[i] / std::sqrt(norm);
    EXPECT_LE(log_likelihood_observed(data, from_mle_scale(th, lay), Model::PI), fit.loglik);
  }
}

TEST(PiMle, Errors) {
  EXPECT_THROW(fit_pi_mle(std::vector<ObservationRecord>{}), ConfigError);
  PiFit bad;
  EXPECT_THROW(require_converged(bad), NonConvergence);
}

TEST(PiBootstrap, RejectsTooFewResamples) {
  const auto data = cohort(200, 43);
  const auto fit = fit_pi_mle(data);
  EXPECT_THROW(bootstrap_ci(data, fit, 2, 1, kCtx), ConfigError);
  EXPECT_THROW(bootstrap_ci(data, PiFit{}, 200, 1, kCtx), ConfigError);
}

TEST(PiBootstrap, IdenticalRecordsGiveZeroWidth) {
  const std::vector<ObservationRecord> data(
      50, make_record("same", 1.0, 2.0, std::vector<double>{1.0}, std::vector<double>{}));
  const auto fit = fit_pi_mle(data);
  ASSERT_TRUE(fit.gradient_converged);
  const SummaryContext ctx{{{"base", {1.0}, {}}}, {1.5}};
  const auto b = bootstrap_ci(data, fit, 100, 3, ctx);
  EXPECT_EQ(b.n_failed, 0);
  for (std::size_t e = 0; e < b.names.size(); ++e) EXPECT_EQ(b.lower[e], b.upper[e]) << b.names[e];
}

TEST(PiBootstrap, IntervalsBracketPointAndAreThreadInvariant) {
  const auto data = cohort(400, 44);
  const auto fit = fit_pi_mle(data);
  ASSERT_TRUE(fit.converged);
  const auto a = bootstrap_ci(data, fit, 120, 9, kCtx, 1);
  const auto b = bootstrap_ci(data, fit, 120, 9, kCtx, 3);
  EXPECT_EQ(a.estimates, b.estimates);
  ASSERT_EQ(a.names.size(), a.point.size());
  for (std::size_t e = 0; e < a.names.size(); ++e) {
    EXPECT_LE(a.lower[e], a.upper[e]);
  }
  const auto it = std::find(a.names.begin(), a.names.end(), "survival(t=2)[strain16]");
  ASSERT_NE(it, a.names.end());
  const auto e = static_cast<std::size_t>(it - a.names.begin());
  EXPECT_LE(a.lower[e], a.point[e]);
  EXPECT_GE(a.upper[e], a.point[e]);
  EXPECT_GT(a.upper[e] - a.lower[e], 0.0);
}

TEST(Turnbull, ExactEventsGiveEmpiricalSurvival) {
  const std::vector<double> t{0.5, 1.0, 1.0, 2.5, 3.0, 4.0, 4.0, 7.0};
  std::vector<CensoredInterval> data;
  for (double x : t) data.push_back({x, x, true});
  const auto c = turnbull_npmle(data);
  for (double s : {0.0, 0.4, 0.5, 0.9, 1.0, 2.0, 3.5, 4.0, 6.9, 7.0, 10.0}) {
    const double ecdf_s =
        static_cast<double>(std::count_if(t.begin(), t.end(), [&](double x) { return x > s; })) / t.size();
    EXPECT_NEAR(c.survival(s), ecdf_s, 1e-8) << s;
  }
}

TEST(Turnbull, AllRightCensoredStaysAtOne) {
  const std::vector<CensoredInterval> data{{1.0, kInf}, {2.0, kInf}, {0.5, kInf}};
  const auto c = turnbull_npmle(data);
  for (double s : {0.0, 0.5, 1.0, 2.0, 100.0}) EXPECT_EQ(c.survival(s), 1.0);
  EXPECT_NEAR(c.tail_mass(), 1.0, 1e-12);
}

TEST(Turnbull, ToyDataMatchesHandIteratedEm) {
  const std::vector<CensoredInterval> data{{0.0, 1.0}, {0.0, 2.0}, {1.0, 2.0}, {2.0, kInf}};
  const auto c = turnbull_npmle(data, 1e-13);
  ASSERT_EQ(c.intervals.size(), 3u);
  // innermost (0,1], (1,2], (2,inf); coverage matrix written out by hand
  const int cover[4][3] = {{1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}};
  std::vector<double> p(3, 1.0 / 3.0);
  for (int it = 0; it < 5000; ++it) {
    std::vector<double> next(3, 0.0);
    for (const auto& row : cover) {
      double denom = 0.0;
      for (int j = 0; j < 3; ++j) denom += row[j] * p[j];
      for (int j = 0; j < 3; ++j) next[j] += row[j] * p[j] / denom / 4.0;
    }
    p = next;
  }
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(c.mass[j], p[j], 1e-9);
  EXPECT_NEAR(c.mass[0], 3.0 / 8.0, 1e-9);
  EXPECT_NEAR(c.mass[1], 3.0 / 8.0, 1e-9);
  EXPECT_NEAR(c.mass[2], 1.0 / 4.0, 1e-9);
  EXPECT_NEAR(c.survival(1.0), 5.0 / 8.0, 1e-9);
  EXPECT_NEAR(c.survival(2.0), 1.0 / 4.0, 1e-9);
}

TEST(Turnbull, LogLikelihoodNeverDecreases) {
  const auto data = cohort(600, 45);
  const auto c = turnbull_npmle(data);
  ASSERT_GT(c.loglik_trace.size(), 2u);
  for (std::size_t k = 1; k < c.loglik_trace.size(); ++k) {
    EXPECT_GE(c.loglik_trace[k], c.loglik_trace[k - 1] - 1e-9) << k;
  }
  double total = 0.0;
  for (double m : c.mass) total += m;
  EXPECT_NEAR(total, 1.0, 1e-9);
  // baseline positives put mass at time zero
  std::size_t c1 = 0;
  for (const auto& r : data) c1 += r.group == Group::C1;
  EXPECT_LT(c.survival(0.0), 1.0 - static_cast<double>(c1) / data.size() + 1e-9);
}

TEST(Turnbull, DisjointIntervalsMatchProductLimit) {
  // groups of tied disjoint intervals followed by censoring past the last one
  const std::vector<std::pair<CensoredInterval, int>> groups{
      {{0.0, 1.0}, 3}, {{1.5, 2.0}, 2}, {{2.5, 3.0}, 4}, {{3.0, 4.0}, 1}, {{5.0, kInf}, 2}};
  std::vector<CensoredInterval> data;
  for (const auto& [iv, k] : groups) data.insert(data.end(), static_cast<std::size_t>(k), iv);
  const auto c = turnbull_npmle(data, 1e-14);
  double at_risk = static_cast<double>(data.size()), s = 1.0;
  for (const auto& [iv, k] : groups) {
    if (iv.right == kInf) break;
    s *= 1.0 - k / at_risk;
    at_risk -= k;
    EXPECT_NEAR(c.survival(iv.right), s, 1e-10) << iv.right;
  }
}

TEST(Turnbull, EdgeCases) {
  EXPECT_TRUE(turnbull_npmle(std::vector<CensoredInterval>{}).mass.empty());
  EXPECT_THROW(turnbull_npmle(std::vector<CensoredInterval>{{2.0, 1.0}}), IllegalInterval);
  const auto c1 = to_censored_interval(kNegInf, 0.0);
  EXPECT_EQ(c1.right, 0.0);
  EXPECT_TRUE(c1.left_closed);
  const auto c4 = to_censored_interval(kNegInf, 3.0);
  EXPECT_EQ(c4.left, 0.0);
  EXPECT_TRUE(c4.left_closed);
}
