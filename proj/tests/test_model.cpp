#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "picsurv/picsurv.hpp"

using namespace picsurv;

namespace {

// Composite Simpson rule; used as an independent integration oracle.
double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

PicParameters simple(double alpha, double lambda, double gamma = 0.0) {
  PicParameters p;
  p.alpha = alpha;
  p.lambda = lambda;
  p.beta_pi = {0.0};
  p.beta_delta = {0.0};
  p.gamma = {gamma};
  return p;
}

const std::vector<double> kStrain16Mix{1.0, 0.0}, kStrain16Inc{0.0};
const std::vector<double> kStrain18Mix{1.0, 1.0}, kStrain18Inc{1.0};

}  // namespace

TEST(Classify, FourGroups) {
  EXPECT_EQ(classify(kNegInf, 0.0), Group::C1);
  EXPECT_EQ(classify(1.2, 3.4), Group::C2);
  EXPECT_EQ(classify(0.0, 3.4), Group::C2);
  EXPECT_EQ(classify(2.0, kInf), Group::C3);
  EXPECT_EQ(classify(0.0, kInf), Group::C3);
  EXPECT_EQ(classify(kNegInf, 0.8), Group::C4);
}

TEST(Classify, RejectsIllegalShapes) {
  EXPECT_THROW(classify(kNegInf, kInf), IllegalInterval);
  EXPECT_THROW(classify(3.0, 3.0), IllegalInterval);
  EXPECT_THROW(classify(3.0, 1.0), IllegalInterval);
  EXPECT_THROW(classify(-1.0, 2.0), IllegalInterval);
  EXPECT_THROW(classify(kNegInf, -2.0), IllegalInterval);
  EXPECT_THROW(classify(std::nan(""), 1.0), IllegalInterval);
  EXPECT_THROW(classify(1.0, kNegInf), IllegalInterval);
}

TEST(MixtureProbs, SymmetricAtZero) {
  const auto m = mixture_probs(std::vector<double>{0.0}, std::vector<double>{0.0}, std::vector<double>{1.0});
  EXPECT_NEAR(m.pi, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.delta, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.incident, 1.0 / 3.0, 1e-15);
}

TEST(MixtureProbs, CervicalTruthPerStrain) {
  const PicParameters t = cervical_truth();
  const auto s16 = mixture_probs(t, kStrain16Mix);
  EXPECT_NEAR(s16.pi, 0.169, 1e-3);
  EXPECT_NEAR(s16.delta, 0.755, 1e-3);
  const auto s18 = mixture_probs(t, kStrain18Mix);
  EXPECT_NEAR(s18.pi, 0.081, 1e-3);
  EXPECT_NEAR(s18.delta, 0.756, 1e-3);
}

TEST(MixtureProbs, DirectFormulaAndSumToOne) {
  RandomStream rng(5, 0);
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> bp{rng.normal(0, 3), rng.normal(0, 3)}, bd{rng.normal(0, 3), rng.normal(0, 3)};
    const std::vector<double> x{1.0, rng.normal()};
    const auto m = mixture_probs(bp, bd, x);
    const double a = std::exp(bp[0] + bp[1] * x[1]), b = std::exp(bd[0] + bd[1] * x[1]);
    EXPECT_NEAR(m.pi, a / (1 + a + b), 1e-12);
    EXPECT_NEAR(m.delta, b / (1 + a + b), 1e-12);
    EXPECT_NEAR(m.pi + m.delta + m.incident, 1.0, 1e-12);
    EXPECT_GT(m.pi, 0.0);
    EXPECT_GT(m.delta, 0.0);
    EXPECT_GT(m.incident, 0.0);
  }
}

TEST(MixtureProbs, OverflowSafe) {
  const auto m = mixture_probs(std::vector<double>{800.0}, std::vector<double>{-800.0}, std::vector<double>{1.0});
  EXPECT_NEAR(m.pi, 1.0, 1e-15);
  EXPECT_FALSE(std::isnan(m.delta));
}

TEST(MixtureProbs, MonotoneInOwnPredictor) {
  double prev = 0.0;
  for (double b = -5; b <= 5; b += 0.5) {
    const auto m = mixture_probs(std::vector<double>{b}, std::vector<double>{0.3}, std::vector<double>{1.0});
    EXPECT_GT(m.pi, prev);
    prev = m.pi;
  }
}

TEST(MixtureProbs, DimensionMismatch) {
  EXPECT_THROW(mixture_probs(std::vector<double>{0.0, 1.0}, std::vector<double>{0.0}, std::vector<double>{1.0, 0.0}),
               DimensionMismatch);
}

TEST(Weibull, SurvivalExamples) {
  EXPECT_EQ(weibull_survival(0.0, simple(2.0, 2.2), kStrain16Inc), 1.0);
  EXPECT_NEAR(weibull_survival(2.2, simple(2.0, 2.2), kStrain16Inc), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(weibull_survival(2.0, simple(2.0, 2.2, -0.5), kStrain18Inc), 0.6058, 5e-5);
  EXPECT_NEAR(weibull_survival(1e6, simple(2.0, 2.2), kStrain16Inc), 0.0, 1e-300);
}

TEST(Weibull, SurvivalStrictlyDecreasing) {
  double prev = 1.0;
  for (double t = 0.1; t < 8.0; t += 0.1) {
    const double s = weibull_survival(t, simple(1.3, 2.0, 0.4), kStrain18Inc);
    EXPECT_LT(s, prev);
    prev = s;
  }
}

TEST(Weibull, HazardExamples) {
  for (double t : {0.1, 1.0, 7.5}) EXPECT_NEAR(weibull_hazard(t, simple(1.0, 3.0), kStrain16Inc), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(weibull_hazard(1.0, simple(2.0, 2.2), kStrain16Inc), 2.0 / 4.84, 1e-12);
  for (double t : {0.3, 1.0, 4.0}) {
    const auto p = simple(1.7, 2.2, -0.5);
    EXPECT_NEAR(weibull_hazard(t, p, kStrain18Inc) / weibull_hazard(t, p, kStrain16Inc), std::exp(-0.5), 1e-12);
  }
  EXPECT_EQ(weibull_hazard(0.0, simple(2.0, 2.2), kStrain16Inc), 0.0);
  EXPECT_THROW(weibull_hazard(0.0, simple(0.5, 2.2), kStrain16Inc), DomainError);
}

TEST(Weibull, DensityExamples) {
  const auto p = simple(2.0, 2.2);
  EXPECT_NEAR(simpson([&](double t) { return weibull_density(t, p, kStrain16Inc); }, 0.0, 50.0), 1.0, 1e-6);
  EXPECT_NEAR(weibull_density(2.2, p, kStrain16Inc), std::exp(-1.0) * (2 * 2.2 / 4.84), 1e-12);
  EXPECT_NEAR(weibull_density(2.2, p, kStrain16Inc), 0.33444, 1e-5);
  EXPECT_EQ(weibull_density(0.0, p, kStrain16Inc), 0.0);
}

TEST(Weibull, SurvivalDifferenceMatchesQuadrature) {
  const auto p = simple(2.0, 2.2, -0.5);
  for (auto [l, r] : {std::pair{0.0, 1.0}, {0.5, 3.0}, {2.0, 2.5}, {1.0, 9.0}}) {
    const double diff = weibull_survival(l, p, kStrain18Inc) - weibull_survival(r, p, kStrain18Inc);
    EXPECT_GT(diff, 0.0);
    EXPECT_LT(diff, 1.0);
    EXPECT_NEAR(diff, simpson([&](double t) { return weibull_density(t, p, kStrain18Inc); }, l, r), 1e-8);
  }
}

TEST(MarginalSurvival, PaperTruthCells) {
  const PicParameters t = cervical_truth();
  EXPECT_NEAR(marginal_survival(2.0, kStrain16Mix, kStrain16Inc, t), 0.788, 5e-4);
  EXPECT_NEAR(marginal_survival(5.0, kStrain16Mix, kStrain16Inc, t), 0.755, 5e-4);
  EXPECT_NEAR(marginal_survival(10.0, kStrain16Mix, kStrain16Inc, t), 0.755, 5e-4);
  EXPECT_NEAR(marginal_survival(2.0, kStrain18Mix, kStrain18Inc, t), 0.855, 5e-4);
  EXPECT_NEAR(marginal_survival(5.0, kStrain18Mix, kStrain18Inc, t), 0.763, 5e-4);
  EXPECT_NEAR(marginal_survival(10.0, kStrain18Mix, kStrain18Inc, t), 0.756, 5e-4);
}

TEST(MarginalSurvival, LimitsAndMonotonicity) {
  const PicParameters t = cervical_truth();
  for (const auto* x : {&kStrain16Mix, &kStrain18Mix}) {
    const auto& xi = x == &kStrain16Mix ? kStrain16Inc : kStrain18Inc;
    const auto m = mixture_probs(t, *x);
    EXPECT_NEAR(marginal_survival(0.0, *x, xi, t), 1.0 - m.pi, 1e-15);
    EXPECT_NEAR(marginal_survival(1e6, *x, xi, t), m.delta, 1e-9);
    double prev = 1.0;
    for (double s = 0.0; s < 15.0; s += 0.25) {
      const double v = marginal_survival(s, *x, xi, t);
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
}

TEST(MedianScale, Examples) {
  EXPECT_NEAR(scale_to_median(2.2, 2.0), 1.8317, 1e-4);
  EXPECT_NEAR(12.0 * scale_to_median(2.2, 2.0), 22.0, 0.1);
  EXPECT_NEAR(median_to_scale(std::log(2.0), 1.0), 1.0, 1e-15);
  RandomStream rng(8, 0);
  for (int i = 0; i < 1000; ++i) {
    const double lambda = std::exp(rng.normal()), alpha = std::exp(rng.normal(0, 0.7));
    EXPECT_NEAR(median_to_scale(scale_to_median(lambda, alpha), alpha), lambda, 1e-12 * lambda);
  }
  // the median solves S(m) = 1/2
  const auto p = simple(2.0, 2.2);
  EXPECT_NEAR(weibull_survival(p.median_time(), p, kStrain16Inc), 0.5, 1e-14);
}

TEST(MedianScale, IncreasingInLambda) {
  double prev = 0.0;
  for (double lambda = 0.5; lambda < 5.0; lambda += 0.5) {
    const double m = scale_to_median(lambda, 1.7);
    EXPECT_GT(m, prev);
    prev = m;
  }
}

TEST(Parameters, ValidateRejectsNonPositive) {
  auto p = cervical_truth();
  p.alpha = 0.0;
  EXPECT_THROW(validate(p), DomainError);
  p = cervical_truth();
  p.lambda = -1.0;
  EXPECT_THROW(validate(p), DomainError);
  EXPECT_NO_THROW(validate(cervical_truth()));
}

TEST(Parameters, ScaleConversionsRoundTrip) {
  const PicParameters t = cervical_truth();
  const ParamLayout lay{Model::PIC, 2, 1};
  EXPECT_EQ(lay.dim(), 7u);
  const auto s = to_sampling_scale(t, lay);
  EXPECT_NEAR(s[0], std::log(2.0), 1e-15);
  EXPECT_NEAR(s[1], std::log(t.median_time()), 1e-15);
  const auto back = from_sampling_scale(s, lay);
  EXPECT_NEAR(back.lambda, 2.2, 1e-12);
  EXPECT_EQ(back.beta_delta, t.beta_delta);
  const auto m = to_mle_scale(t, lay);
  EXPECT_NEAR(from_mle_scale(m, lay).lambda, 2.2, 1e-12);
  const ParamLayout pi{Model::PI, 2, 1};
  EXPECT_EQ(pi.dim(), 5u);
  EXPECT_TRUE(from_mle_scale(std::vector<double>(5, 0.0), pi).beta_delta.empty());
  EXPECT_THROW(from_mle_scale(std::vector<double>(4, 0.0), pi), DimensionMismatch);
  const auto names = lay.names(true);
  EXPECT_EQ(names[1], "log_m_tilde");
  EXPECT_EQ(names[4], "beta_delta_1");
}
