#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "picsurv/error.hpp"
#include "picsurv/numeric.hpp"

namespace picsurv {

enum class Model { PIC, PI };

inline const char* model_name(Model m) { return m == Model::PIC ? "pic" : "pi"; }

// C1: positive at baseline. C2: interval-censored incident.
// C3: censored, never positive. C4: baseline missing, positive at first test.
enum class Group { C1 = 1, C2 = 2, C3 = 3, C4 = 4 };

inline int group_number(Group g) { return static_cast<int>(g); }

// Legal shapes: (-inf, 0), (l, r) with 0 <= l < r < inf, (l, inf) with
// l >= 0, and (-inf, r) with 0 < r < inf.
inline Group classify(double l, double r) {
  auto fail = [&](const char* why) -> Group {
    throw IllegalInterval(std::string(why) + " (l=" + std::to_string(l) +
                          ", r=" + std::to_string(r) + ")");
  };
  if (std::isnan(l) || std::isnan(r)) return fail("NaN endpoint");
  if (l == kInf) return fail("left endpoint is +inf");
  if (r == kNegInf) return fail("right endpoint is -inf");
  if (std::isfinite(l) && l < 0.0) return fail("negative left endpoint");
  if (std::isfinite(r) && r < 0.0) return fail("negative right endpoint");
  if (l == kNegInf) {
    if (r == kInf) return fail("no test result at all");
    return r == 0.0 ? Group::C1 : Group::C4;
  }
  if (r == kInf) return Group::C3;
  if (r <= l) return fail("right endpoint not after left endpoint");
  return Group::C2;
}

struct ObservationRecord {
  std::string id;
  double l = kNegInf;
  double r = kInf;
  std::vector<double> x_mix;  // leading 1 for the intercept
  std::vector<double> x_inc;
  Group group = Group::C3;
};

inline ObservationRecord make_record(std::string id, double l, double r,
                                     std::vector<double> x_mix,
                                     std::vector<double> x_inc = {}) {
  ObservationRecord rec{std::move(id), l, r, std::move(x_mix), std::move(x_inc), Group::C3};
  rec.group = classify(l, r);
  return rec;
}

inline double median_to_scale(double median_time, double alpha) {
  return median_time / std::pow(kLn2, 1.0 / alpha);
}

inline double scale_to_median(double lambda, double alpha) {
  return lambda * std::pow(kLn2, 1.0 / alpha);
}

struct PicParameters {
  double alpha = 1.0;
  double lambda = 1.0;
  std::vector<double> beta_pi;
  std::vector<double> beta_delta;  // empty under the PI model
  std::vector<double> gamma;

  double median_time() const { return scale_to_median(lambda, alpha); }
};

inline void validate(const PicParameters& p) {
  if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) throw DomainError("alpha must be positive");
  if (!(p.lambda > 0.0) || !std::isfinite(p.lambda)) throw DomainError("lambda must be positive");
  if (!p.beta_delta.empty() && p.beta_delta.size() != p.beta_pi.size()) {
    throw DimensionMismatch("beta_pi and beta_delta lengths differ");
  }
}

// Standard cervical simulation truth (strain 16 baseline, strain 18 x=1).
inline PicParameters cervical_truth() {
  return PicParameters{2.0, 2.2, {0.799, -1.498}, {2.296, -0.762}, {-0.5}};
}

struct MixtureProbs {
  double pi = 0.0;
  double delta = 0.0;
  double incident = 1.0;
};

struct LogMixture {
  double log_pi = kNegInf;
  double log_delta = kNegInf;
  double log_incident = 0.0;
};

// Three-category logit with the incident class as reference.
inline LogMixture log_mixture(double eta_pi, double eta_delta) {
  const double lse = log_sum_exp(eta_pi, eta_delta, 0.0);
  return {eta_pi - lse, eta_delta - lse, -lse};
}

// Two-category (PI) logit: delta fixed at 0.
inline LogMixture log_mixture(double eta_pi) {
  const double lse = log_add_exp(eta_pi, 0.0);
  return {eta_pi - lse, kNegInf, -lse};
}

inline MixtureProbs to_probs(const LogMixture& lm) {
  MixtureProbs m;
  m.pi = std::exp(lm.log_pi);
  m.delta = std::exp(lm.log_delta);
  m.incident = 1.0 - m.pi - m.delta;
  return m;
}

inline MixtureProbs mixture_probs(std::span<const double> beta_pi,
                                  std::span<const double> beta_delta,
                                  std::span<const double> x_mix) {
  if (beta_pi.size() != x_mix.size() || beta_delta.size() != x_mix.size()) {
    throw DimensionMismatch("mixture_probs: coefficient and covariate lengths differ");
  }
  return to_probs(log_mixture(dot(beta_pi, x_mix), dot(beta_delta, x_mix)));
}

// PIC when params carry beta_delta, PI otherwise.
inline MixtureProbs mixture_probs(const PicParameters& p, std::span<const double> x_mix) {
  if (p.beta_delta.empty()) {
    if (p.beta_pi.size() != x_mix.size()) {
      throw DimensionMismatch("mixture_probs: coefficient and covariate lengths differ");
    }
    return to_probs(log_mixture(dot(p.beta_pi, x_mix)));
  }
  return mixture_probs(p.beta_pi, p.beta_delta, x_mix);
}

// Cumulative hazard H(t) = (t / lambda)^alpha * exp(gamma . x).
inline double cumulative_hazard(double t, double alpha, double lambda, double linpred) {
  if (t <= 0.0) return 0.0;
  if (t == kInf) return kInf;
  return std::exp(alpha * (std::log(t) - std::log(lambda)) + linpred);
}

inline double weibull_survival(double t, const PicParameters& p, std::span<const double> x_inc) {
  if (t < 0.0) throw DomainError("weibull_survival: negative time");
  return std::exp(-cumulative_hazard(t, p.alpha, p.lambda, dot(p.gamma, x_inc)));
}

inline double weibull_hazard(double t, const PicParameters& p, std::span<const double> x_inc) {
  if (t < 0.0) throw DomainError("weibull_hazard: negative time");
  const double rel = std::exp(dot(p.gamma, x_inc));
  if (t == 0.0) {
    if (p.alpha < 1.0) throw DomainError("weibull_hazard: singular at t=0 when alpha<1");
    return p.alpha == 1.0 ? rel / p.lambda : 0.0;
  }
  return p.alpha / std::pow(p.lambda, p.alpha) * std::pow(t, p.alpha - 1.0) * rel;
}

inline double weibull_density(double t, const PicParameters& p, std::span<const double> x_inc) {
  return weibull_hazard(t, p, x_inc) * weibull_survival(t, p, x_inc);
}

// Population probability of no event by t: delta + (1 - pi - delta) S(t).
inline double marginal_survival(double t, std::span<const double> x_mix,
                                std::span<const double> x_inc, const PicParameters& p) {
  const MixtureProbs m = mixture_probs(p, x_mix);
  return m.delta + m.incident * weibull_survival(t, p, x_inc);
}

// Parameter vector layouts. Index 1 holds log m~ on the sampling scale and
// log lambda on the optimisation scale; everything else is shared:
//   [log alpha, log m~ | log lambda, beta_pi..., beta_delta... (PIC), gamma...]
struct ParamLayout {
  Model model = Model::PIC;
  std::size_t q_mix = 1;
  std::size_t q_inc = 0;

  static constexpr std::size_t kLogAlpha = 0;
  static constexpr std::size_t kLogScale = 1;

  std::size_t beta_pi(std::size_t j) const { return 2 + j; }
  std::size_t beta_delta(std::size_t j) const { return 2 + q_mix + j; }
  std::size_t gamma(std::size_t k) const {
    return 2 + (model == Model::PIC ? 2 * q_mix : q_mix) + k;
  }
  std::size_t dim() const { return gamma(q_inc); }

  std::vector<std::string> names(bool sampling_scale) const {
    std::vector<std::string> out{"log_alpha", sampling_scale ? "log_m_tilde" : "log_lambda"};
    for (std::size_t j = 0; j < q_mix; ++j) out.push_back("beta_pi_" + std::to_string(j + 1));
    if (model == Model::PIC) {
      for (std::size_t j = 0; j < q_mix; ++j) out.push_back("beta_delta_" + std::to_string(j + 1));
    }
    for (std::size_t k = 0; k < q_inc; ++k) out.push_back("gamma_" + std::to_string(k + 1));
    return out;
  }
};

inline void unpack_coefficients(std::span<const double> theta, const ParamLayout& lay,
                                PicParameters& p) {
  if (theta.size() != lay.dim()) throw DimensionMismatch("parameter vector has wrong length");
  p.beta_pi.assign(theta.begin() + 2, theta.begin() + 2 + static_cast<long>(lay.q_mix));
  if (lay.model == Model::PIC) {
    p.beta_delta.assign(theta.begin() + static_cast<long>(lay.beta_delta(0)),
                        theta.begin() + static_cast<long>(lay.beta_delta(0) + lay.q_mix));
  } else {
    p.beta_delta.clear();
  }
  p.gamma.assign(theta.begin() + static_cast<long>(lay.gamma(0)), theta.end());
}

inline std::vector<double> pack_coefficients(const PicParameters& p, const ParamLayout& lay,
                                             double log_scale) {
  std::vector<double> theta(lay.dim());
  theta[0] = std::log(p.alpha);
  theta[1] = log_scale;
  if (p.beta_pi.size() != lay.q_mix || p.gamma.size() != lay.q_inc) {
    throw DimensionMismatch("parameters do not match layout");
  }
  for (std::size_t j = 0; j < lay.q_mix; ++j) theta[lay.beta_pi(j)] = p.beta_pi[j];
  if (lay.model == Model::PIC) {
    if (p.beta_delta.size() != lay.q_mix) throw DimensionMismatch("beta_delta missing for PIC");
    for (std::size_t j = 0; j < lay.q_mix; ++j) theta[lay.beta_delta(j)] = p.beta_delta[j];
  }
  for (std::size_t k = 0; k < lay.q_inc; ++k) theta[lay.gamma(k)] = p.gamma[k];
  return theta;
}

// Sampling scale: (log alpha, log m~, beta..., gamma...).
inline PicParameters from_sampling_scale(std::span<const double> theta, const ParamLayout& lay) {
  PicParameters p;
  p.alpha = std::exp(theta[0]);
  p.lambda = median_to_scale(std::exp(theta[1]), p.alpha);
  unpack_coefficients(theta, lay, p);
  return p;
}

inline std::vector<double> to_sampling_scale(const PicParameters& p, const ParamLayout& lay) {
  return pack_coefficients(p, lay, std::log(p.median_time()));
}

// Optimisation scale: (log alpha, log lambda, beta..., gamma...).
inline PicParameters from_mle_scale(std::span<const double> theta, const ParamLayout& lay) {
  PicParameters p;
  p.alpha = std::exp(theta[0]);
  p.lambda = std::exp(theta[1]);
  unpack_coefficients(theta, lay, p);
  return p;
}

inline std::vector<double> to_mle_scale(const PicParameters& p, const ParamLayout& lay) {
  return pack_coefficients(p, lay, std::log(p.lambda));
}

}  // namespace picsurv
