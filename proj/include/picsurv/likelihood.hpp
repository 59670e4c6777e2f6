#pragma once

#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "picsurv/model.hpp"

namespace picsurv {

// Survival-side log term of one record given its endpoint cumulative hazards:
//   C2: log(S(l) - S(r)),  C3: log S(l),  C4: log(1 - S(r)),  C1: unused.
inline double survival_log_term(Group g, double h_l, double h_r) {
  switch (g) {
    case Group::C1:
      return 0.0;
    case Group::C2:
      if (h_l == kInf) return kNegInf;
      return -h_l + log1m_exp_neg(h_r - h_l);
    case Group::C3:
      return -h_l;
    case Group::C4:
      return log1m_exp_neg(h_r);
  }
  return kNegInf;
}

// Log of one observed-likelihood factor.
inline double record_log_likelihood(Group g, const LogMixture& m, double surv_term) {
  switch (g) {
    case Group::C1:
      return m.log_pi;
    case Group::C2:
      return m.log_incident + surv_term;
    case Group::C3:
      return log_add_exp(m.log_delta, m.log_incident + surv_term);
    case Group::C4:
      return log_add_exp(m.log_pi, m.log_incident + surv_term);
  }
  return kNegInf;
}

inline LogMixture record_log_mixture(const ObservationRecord& rec, const PicParameters& p,
                                     Model model) {
  const double eta_pi = dot(p.beta_pi, rec.x_mix);
  if (model == Model::PI) return log_mixture(eta_pi);
  return log_mixture(eta_pi, dot(p.beta_delta, rec.x_mix));
}

// Sum of log observed-likelihood factors. Returns -inf (never throws) when a
// factor underflows to zero.
inline double log_likelihood_observed(std::span<const ObservationRecord> data,
                                      const PicParameters& p, Model model) {
  double total = 0.0;
  for (const auto& rec : data) {
    const LogMixture m = record_log_mixture(rec, p, model);
    const double lp = dot(p.gamma, rec.x_inc);
    const double h_l = cumulative_hazard(rec.l, p.alpha, p.lambda, lp);
    const double h_r = cumulative_hazard(rec.r, p.alpha, p.lambda, lp);
    total += record_log_likelihood(rec.group, m, survival_log_term(rec.group, h_l, h_r));
  }
  return std::isnan(total) ? kNegInf : total;
}

enum class LatentStatus { Prevalent, Incident, Cured };

struct LatentTruth {
  LatentStatus status = LatentStatus::Cured;
  double event_time = kInf;  // finite iff Incident
};

inline const char* status_name(LatentStatus s) {
  switch (s) {
    case LatentStatus::Prevalent: return "prevalent";
    case LatentStatus::Incident: return "incident";
    case LatentStatus::Cured: return "cured";
  }
  return "?";
}

// Complete-data log likelihood (status and event time known).
inline double log_likelihood_complete(std::span<const ObservationRecord> data,
                                      std::span<const LatentTruth> truth,
                                      const PicParameters& p) {
  if (data.size() != truth.size()) throw DimensionMismatch("records and truths differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const LogMixture m = record_log_mixture(data[i], p, Model::PIC);
    switch (truth[i].status) {
      case LatentStatus::Prevalent:
        total += m.log_pi;
        break;
      case LatentStatus::Cured:
        total += m.log_delta;
        break;
      case LatentStatus::Incident: {
        const double t = truth[i].event_time;
        if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("incident subject needs finite t > 0");
        const double lp = dot(p.gamma, data[i].x_inc);
        const double h = cumulative_hazard(t, p.alpha, p.lambda, lp);
        // log f = log alpha + log H - log t - H
        total += m.log_incident + std::log(p.alpha) + std::log(h) - std::log(t) - h;
        break;
      }
    }
  }
  return std::isnan(total) ? kNegInf : total;
}

// Gradient of the observed log likelihood on the optimisation scale
// (log alpha, log lambda, beta_pi, [beta_delta], gamma).
inline std::vector<double> log_likelihood_gradient(std::span<const ObservationRecord> data,
                                                   std::span<const double> theta,
                                                   const ParamLayout& lay) {
  const PicParameters p = from_mle_scale(theta, lay);
  const bool pic = lay.model == Model::PIC;
  std::vector<double> g(lay.dim(), 0.0);

  // dH/d(log alpha, log lambda, gamma) accumulated with weight w.
  auto add_hazard_grad = [&](double w, double t, double h, std::span<const double> x_inc) {
    if (w == 0.0 || !(t > 0.0) || !std::isfinite(t) || h == 0.0) return;
    g[0] += w * p.alpha * (std::log(t) - std::log(p.lambda)) * h;
    g[1] += w * -p.alpha * h;
    for (std::size_t k = 0; k < lay.q_inc; ++k) g[lay.gamma(k)] += w * x_inc[k] * h;
  };

  for (const auto& rec : data) {
    const LogMixture m = record_log_mixture(rec, p, lay.model);
    const double pi = std::exp(m.log_pi);
    const double delta = std::exp(m.log_delta);
    const double lp = dot(p.gamma, rec.x_inc);
    const double h_l = cumulative_hazard(rec.l, p.alpha, p.lambda, lp);
    const double h_r = cumulative_hazard(rec.r, p.alpha, p.lambda, lp);

    double d_a = 0.0, d_b = 0.0, d_hl = 0.0, d_hr = 0.0;
    switch (rec.group) {
      case Group::C1:
        d_a = 1.0 - pi;
        d_b = -delta;
        break;
      case Group::C2: {
        const double gap = h_r - h_l;
        d_a = -pi;
        d_b = -delta;
        d_hl = 1.0 / std::expm1(-gap);
        d_hr = 1.0 / std::expm1(gap);
        break;
      }
      case Group::C3: {
        const double log_s = -h_l;
        const double log_l = log_add_exp(m.log_delta, m.log_incident + log_s);
        const double log_1ml = log_add_exp(m.log_pi, m.log_incident + log1m_exp_neg(h_l));
        d_a = -pi;
        d_b = delta * std::exp(log_1ml - log_l);
        d_hl = -std::exp(m.log_incident + log_s - log_l);
        break;
      }
      case Group::C4: {
        const double log_s = -h_r;
        const double log_l = log_add_exp(m.log_pi, m.log_incident + log1m_exp_neg(h_r));
        const double log_1ml = log_add_exp(m.log_delta, m.log_incident + log_s);
        d_a = pi * std::exp(log_1ml - log_l);
        d_b = -delta;
        d_hr = std::exp(m.log_incident + log_s - log_l);
        break;
      }
    }
    for (std::size_t j = 0; j < lay.q_mix; ++j) {
      g[lay.beta_pi(j)] += d_a * rec.x_mix[j];
      if (pic) g[lay.beta_delta(j)] += d_b * rec.x_mix[j];
    }
    add_hazard_grad(d_hl, rec.l, h_l, rec.x_inc);
    add_hazard_grad(d_hr, rec.r, h_r, rec.x_inc);
  }
  return g;
}

// Observed likelihood with the dataset pre-arranged for repeated evaluation.
// Mixture terms are cached per distinct x_mix row and survival terms per
// record, so a sampler that changes only one side recomputes only that side.
class ObservedLikelihood {
 public:
  struct MixtureState {
    std::vector<LogMixture> per_pattern;
  };
  struct SurvivalState {
    std::vector<double> term;  // survival_log_term per C3/C4 record
    double c2_sum = 0.0;
  };

  ObservedLikelihood(std::span<const ObservationRecord> data, Model model) : model_(model) {
    if (data.empty()) throw ConfigError("dataset is empty");
    q_mix_ = data.front().x_mix.size();
    q_inc_ = data.front().x_inc.size();
    std::map<std::vector<double>, std::size_t> index;
    for (const auto& rec : data) {
      if (rec.x_mix.size() != q_mix_ || rec.x_inc.size() != q_inc_) {
        throw DimensionMismatch("record " + rec.id + " has inconsistent covariate lengths");
      }
      auto [it, inserted] = index.try_emplace(rec.x_mix, patterns_.size());
      if (inserted) patterns_.push_back(rec.x_mix);
      const std::size_t pat = it->second;
      if (n_c1_.size() < patterns_.size()) {
        n_c1_.resize(patterns_.size(), 0);
        n_c2_.resize(patterns_.size(), 0);
      }
      Entry e{pat, rec.group, log_time(rec.l), log_time(rec.r), rec.l, rec.r, x_inc_flat_.size()};
      x_inc_flat_.insert(x_inc_flat_.end(), rec.x_inc.begin(), rec.x_inc.end());
      switch (rec.group) {
        case Group::C1: ++n_c1_[pat]; break;
        case Group::C2: ++n_c2_[pat]; c2_.push_back(e); break;
        case Group::C3:
        case Group::C4: open_.push_back(e); break;
      }
    }
  }

  Model model() const { return model_; }
  std::size_t q_mix() const { return q_mix_; }
  std::size_t q_inc() const { return q_inc_; }

  void compute_mixture(std::span<const double> beta_pi, std::span<const double> beta_delta,
                       MixtureState& out) const {
    out.per_pattern.resize(patterns_.size());
    for (std::size_t k = 0; k < patterns_.size(); ++k) {
      const double a = dot(beta_pi, patterns_[k]);
      out.per_pattern[k] =
          model_ == Model::PI ? log_mixture(a) : log_mixture(a, dot(beta_delta, patterns_[k]));
    }
  }

  void compute_survival(double alpha, double lambda, std::span<const double> gamma,
                        SurvivalState& out) const {
    const double log_lambda = std::log(lambda);
    auto hazard = [&](const Entry& e, double log_t, double t) {
      if (t <= 0.0) return 0.0;
      if (t == kInf) return kInf;
      double lp = 0.0;
      for (std::size_t k = 0; k < q_inc_; ++k) lp += gamma[k] * x_inc_flat_[e.x_offset + k];
      return std::exp(alpha * (log_t - log_lambda) + lp);
    };
    double c2 = 0.0;
    for (const auto& e : c2_) {
      c2 += survival_log_term(Group::C2, hazard(e, e.log_l, e.l), hazard(e, e.log_r, e.r));
    }
    out.c2_sum = c2;
    out.term.resize(open_.size());
    for (std::size_t i = 0; i < open_.size(); ++i) {
      const Entry& e = open_[i];
      out.term[i] = e.group == Group::C3
                        ? survival_log_term(Group::C3, hazard(e, e.log_l, e.l), 0.0)
                        : survival_log_term(Group::C4, 0.0, hazard(e, e.log_r, e.r));
    }
  }

  double combine(const MixtureState& mix, const SurvivalState& surv) const {
    double total = surv.c2_sum;
    for (std::size_t k = 0; k < patterns_.size(); ++k) {
      if (n_c1_[k]) total += static_cast<double>(n_c1_[k]) * mix.per_pattern[k].log_pi;
      if (n_c2_[k]) total += static_cast<double>(n_c2_[k]) * mix.per_pattern[k].log_incident;
    }
    for (std::size_t i = 0; i < open_.size(); ++i) {
      const LogMixture& m = mix.per_pattern[open_[i].pattern];
      total += record_log_likelihood(open_[i].group, m, surv.term[i]);
    }
    return std::isnan(total) ? kNegInf : total;
  }

  double operator()(const PicParameters& p) const {
    MixtureState mix;
    SurvivalState surv;
    compute_mixture(p.beta_pi, p.beta_delta, mix);
    compute_survival(p.alpha, p.lambda, p.gamma, surv);
    return combine(mix, surv);
  }

 private:
  struct Entry {
    std::size_t pattern;
    Group group;
    double log_l, log_r, l, r;
    std::size_t x_offset;
  };

  static double log_time(double t) { return (t > 0.0 && std::isfinite(t)) ? std::log(t) : 0.0; }

  Model model_;
  std::size_t q_mix_ = 0, q_inc_ = 0;
  std::vector<std::vector<double>> patterns_;
  std::vector<std::size_t> n_c1_, n_c2_;
  std::vector<Entry> c2_, open_;
  std::vector<double> x_inc_flat_;
};

}  // namespace picsurv
