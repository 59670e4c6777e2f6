#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "picsurv/model.hpp"
#include "picsurv/rng.hpp"

namespace picsurv {

struct NormalSpec {
  double mu = 0.0;
  double sigma = 1.0;
};

// Log-scale parameters of a lognormal variable.
struct LogNormalSpec {
  double mu = 0.0;
  double sigma = 1.0;

  double quantile_low() const { return std::exp(mu - kZ975 * sigma); }
  double quantile_high() const { return std::exp(mu + kZ975 * sigma); }
};

// Elicited 95% quantiles -> lognormal. The mean is the midpoint of the log
// quantiles because Phi^{-1}(0.025) = -Phi^{-1}(0.975).
inline LogNormalSpec lognormal_from_quantiles(double ci_low, double ci_high) {
  if (!(ci_low > 0.0)) throw QuantileOrder("lower quantile must be positive");
  if (!(ci_low < ci_high)) throw QuantileOrder("lower quantile must be below upper quantile");
  const double lo = std::log(ci_low);
  const double hi = std::log(ci_high);
  return {(lo + hi) / 2.0, (hi - lo) / (2.0 * kZ975)};
}

// beta_1pi = log r_pi and beta_1delta = log r_delta, so the lognormal ratio
// priors carry over unchanged as normal priors on the intercepts.
inline std::pair<NormalSpec, NormalSpec> ratio_priors_to_intercepts(const LogNormalSpec& r_pi,
                                                                    const LogNormalSpec& r_delta) {
  return {NormalSpec{r_pi.mu, r_pi.sigma}, NormalSpec{r_delta.mu, r_delta.sigma}};
}

struct PicPriorSpec {
  LogNormalSpec alpha;
  LogNormalSpec median_time;  // base group (all covariates zero)
  std::vector<NormalSpec> beta_pi;
  std::vector<NormalSpec> beta_delta;
  std::vector<NormalSpec> gamma;
  std::string time_unit = "years";
};

inline void check_prior_dims(const PicPriorSpec& spec, const ParamLayout& lay) {
  if (spec.beta_pi.size() != lay.q_mix) throw DimensionMismatch("prior beta_pi length != q_mix");
  if (lay.model == Model::PIC && spec.beta_delta.size() != lay.q_mix) {
    throw DimensionMismatch("prior beta_delta length != q_mix");
  }
  if (spec.gamma.size() != lay.q_inc) throw DimensionMismatch("prior gamma length != q_inc");
}

// Normal (mu, sigma) of every coordinate on the sampling scale.
inline std::vector<NormalSpec> sampling_scale_priors(const PicPriorSpec& spec,
                                                     const ParamLayout& lay) {
  check_prior_dims(spec, lay);
  std::vector<NormalSpec> out(lay.dim());
  out[0] = {spec.alpha.mu, spec.alpha.sigma};
  out[1] = {spec.median_time.mu, spec.median_time.sigma};
  for (std::size_t j = 0; j < lay.q_mix; ++j) {
    out[lay.beta_pi(j)] = spec.beta_pi[j];
    if (lay.model == Model::PIC) out[lay.beta_delta(j)] = spec.beta_delta[j];
  }
  for (std::size_t k = 0; k < lay.q_inc; ++k) out[lay.gamma(k)] = spec.gamma[k];
  return out;
}

// Log prior density of theta on the sampling scale (log alpha, log m~,
// beta, gamma). Every coordinate is normal there, so no Jacobian appears.
inline double log_prior_density(std::span<const double> theta, const PicPriorSpec& spec,
                                const ParamLayout& lay) {
  const auto priors = sampling_scale_priors(spec, lay);
  if (theta.size() != priors.size()) throw DimensionMismatch("theta length != layout dimension");
  double s = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    s += normal_log_pdf(theta[i], priors[i].mu, priors[i].sigma);
  }
  return s;
}

inline std::vector<double> draw_from_prior(const PicPriorSpec& spec, const ParamLayout& lay,
                                           RandomStream& rng) {
  const auto priors = sampling_scale_priors(spec, lay);
  std::vector<double> theta(priors.size());
  for (std::size_t i = 0; i < priors.size(); ++i) theta[i] = rng.normal(priors[i].mu, priors[i].sigma);
  return theta;
}

enum class Preset { InformativeCervical, VagueCervical, MisspecifiedCervical };

inline Preset parse_preset(const std::string& name) {
  if (name == "informative" || name == "InformativeCervical") return Preset::InformativeCervical;
  if (name == "vague" || name == "VagueCervical") return Preset::VagueCervical;
  if (name == "misspecified" || name == "MisspecifiedCervical") return Preset::MisspecifiedCervical;
  throw ConfigError("unknown prior preset '" + name + "'");
}

inline const char* preset_name(Preset p) {
  switch (p) {
    case Preset::InformativeCervical: return "informative";
    case Preset::VagueCervical: return "vague";
    case Preset::MisspecifiedCervical: return "misspecified";
  }
  return "?";
}

// Cervical screening presets: two-coefficient mixture (intercept, strain 18)
// and one hazard coefficient, time in years.
inline PicPriorSpec preset(Preset which) {
  PicPriorSpec s;
  s.time_unit = "years";
  switch (which) {
    case Preset::InformativeCervical:
      s.alpha = {std::log(2.0), 0.1};
      s.median_time = {std::log(23.0 / 12.0), 0.2};
      s.beta_pi = {{-0.07, 0.31}, {-0.89, 0.33}};
      s.beta_delta = {{1.69, 0.22}, {0.00, 0.05}};
      s.gamma = {{-0.69, 0.1}};
      break;
    case Preset::VagueCervical:
      s.alpha = {std::log(1.0), 1.0};
      s.median_time = {std::log(2.0), 1.0};
      s.beta_pi = {{0.0, 1.0}, {0.0, 1.0}};
      s.beta_delta = {{0.0, 1.0}, {0.0, 1.0}};
      s.gamma = {{0.0, 1.0}};
      break;
    case Preset::MisspecifiedCervical:
      s.alpha = {std::log(1.0), 0.31};
      s.median_time = {std::log(2.0), 0.03};
      s.beta_pi = {{0.0, 0.31}, {0.0, 0.31}};
      s.beta_delta = {{0.0, 0.31}, {0.0, 0.31}};
      s.gamma = {{0.0, 0.26}};
      break;
  }
  return s;
}

// Drops the cure-side priors for a PI fit.
inline PicPriorSpec for_model(PicPriorSpec spec, Model model) {
  if (model == Model::PI) spec.beta_delta.clear();
  return spec;
}

// JSON: {"alpha":{"mu":..,"sigma":..}, "median_time":{..}, "beta_pi":[{..}],
//        "beta_delta":[..], "gamma":[..], "time_unit":"years"}
inline void to_json(nlohmann::json& j, const NormalSpec& s) { j = {{"mu", s.mu}, {"sigma", s.sigma}}; }
inline void to_json(nlohmann::json& j, const LogNormalSpec& s) { j = {{"mu", s.mu}, {"sigma", s.sigma}}; }

inline void from_json(const nlohmann::json& j, NormalSpec& s) {
  s.mu = j.at("mu").get<double>();
  s.sigma = j.at("sigma").get<double>();
  if (!(s.sigma > 0.0)) throw ConfigError("prior sigma must be positive");
}
inline void from_json(const nlohmann::json& j, LogNormalSpec& s) {
  s.mu = j.at("mu").get<double>();
  s.sigma = j.at("sigma").get<double>();
  if (!(s.sigma > 0.0)) throw ConfigError("prior sigma must be positive");
}

inline void to_json(nlohmann::json& j, const PicPriorSpec& s) {
  j = {{"alpha", s.alpha},     {"median_time", s.median_time}, {"beta_pi", s.beta_pi},
       {"beta_delta", s.beta_delta}, {"gamma", s.gamma},       {"time_unit", s.time_unit}};
}

inline void from_json(const nlohmann::json& j, PicPriorSpec& s) {
  s.alpha = j.at("alpha").get<LogNormalSpec>();
  s.median_time = j.at("median_time").get<LogNormalSpec>();
  s.beta_pi = j.at("beta_pi").get<std::vector<NormalSpec>>();
  s.beta_delta = j.value("beta_delta", std::vector<NormalSpec>{});
  s.gamma = j.value("gamma", std::vector<NormalSpec>{});
  s.time_unit = j.value("time_unit", std::string("years"));
}

}  // namespace picsurv
