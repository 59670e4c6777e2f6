#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "picsurv/likelihood.hpp"
#include "picsurv/parallel.hpp"
#include "picsurv/rng.hpp"

namespace picsurv {

// Inverse-CDF draw from the incident-time distribution: S(t | x) = u.
inline double inverse_weibull_sample(double u, const PicParameters& p, std::span<const double> x_inc) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("inverse_weibull_sample: u must lie in (0, 1)");
  const double lp = dot(p.gamma, x_inc);
  return p.lambda * std::pow(-std::log(u), 1.0 / p.alpha) * std::exp(-lp / p.alpha);
}

// Cervical-screening data-generating process. Covariate: strain 18 indicator
// (x_mix = (1, x), x_inc = (x)). Times in years.
struct DgpConfig {
  std::size_t n = 400;
  double p_baseline_test = 0.88;
  int visit_gap_shape = 2;  // gamma gaps between tests
  double visit_gap_scale = 1.0;
  int max_visits = 10;
  double horizon = 20.0;
  double p_strain16 = 0.76;
  PicParameters truth = cervical_truth();
  std::uint64_t seed = 1;
  bool count_baseline_in_cap = false;
  std::vector<double> fixed_visits;  // non-empty: deterministic visit times instead of gamma gaps
  int threads = 0;

  void validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (n == 0) throw ConfigError("n must be positive");
    if (!prob(p_baseline_test)) throw ConfigError("p_baseline_test must lie in [0, 1]");
    if (!prob(p_strain16)) throw ConfigError("p_strain16 must lie in [0, 1]");
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (max_visits < 1) throw ConfigError("max_visits must be positive");
    if (visit_gap_shape < 1 || !(visit_gap_scale > 0.0)) throw ConfigError("invalid visit gap distribution");
    for (std::size_t i = 0; i < fixed_visits.size(); ++i) {
      if (!(fixed_visits[i] > 0.0) || (i > 0 && !(fixed_visits[i] > fixed_visits[i - 1]))) {
        throw ConfigError("fixed_visits must be positive and strictly increasing");
      }
    }
    validate_params(truth);
  }

  static void validate_params(const PicParameters& p) {
    picsurv::validate(p);
    if (p.beta_pi.size() != 2 || p.beta_delta.size() != 2 || p.gamma.size() != 1) {
      throw DimensionMismatch("simulation truth needs beta_pi, beta_delta of length 2 and gamma of length 1");
    }
  }
};

struct Cohort {
  std::vector<ObservationRecord> records;
  std::vector<LatentTruth> truth;
  std::size_t n_redrawn = 0;
};

namespace detail {

// One subject; false when the draw carries no test information at all.
inline bool draw_subject(RandomStream& rng, const DgpConfig& cfg, ObservationRecord& rec,
                         LatentTruth& latent) {
  const double x = rng.bernoulli(cfg.p_strain16) ? 0.0 : 1.0;
  rec.x_mix = {1.0, x};
  rec.x_inc = {x};
  const MixtureProbs m = mixture_probs(cfg.truth, rec.x_mix);
  const double u = rng.uniform();
  if (u < m.pi) {
    latent = {LatentStatus::Prevalent, kInf};
  } else if (u < m.pi + m.delta) {
    latent = {LatentStatus::Cured, kInf};
  } else {
    latent = {LatentStatus::Incident, inverse_weibull_sample(rng.uniform(), cfg.truth, rec.x_inc)};
  }
  auto positive_by = [&](double t) {
    return latent.status == LatentStatus::Prevalent ||
           (latent.status == LatentStatus::Incident && latent.event_time <= t);
  };

  const bool tested = rng.bernoulli(cfg.p_baseline_test);
  double l = kNegInf, r = kInf;
  if (tested) {
    if (positive_by(0.0)) {
      rec.l = kNegInf;
      rec.r = 0.0;
      rec.group = Group::C1;
      return true;
    }
    l = 0.0;
  }
  int count = (tested && cfg.count_baseline_in_cap) ? 1 : 0;
  double time = 0.0;
  for (std::size_t k = 0; count < cfg.max_visits; ++k) {
    if (cfg.fixed_visits.empty()) {
      time += rng.gamma_int(cfg.visit_gap_shape, cfg.visit_gap_scale);
    } else {
      if (k >= cfg.fixed_visits.size()) break;
      time = cfg.fixed_visits[k];
    }
    if (time > cfg.horizon) break;
    ++count;
    if (positive_by(time)) {
      r = time;
      break;
    }
    l = time;
  }
  if (l == kNegInf && r == kInf) return false;
  rec.l = l;
  rec.r = r;
  rec.group = classify(l, r);
  return true;
}

}  // namespace detail

// Subject i draws from substream i of cfg.seed, so the cohort does not depend
// on the worker count. Subjects without any test inside the horizon are
// redrawn from the same substream and counted in n_redrawn.
inline Cohort simulate_cohort(const DgpConfig& cfg) {
  cfg.validate();
  Cohort out;
  out.records.resize(cfg.n);
  out.truth.resize(cfg.n);
  std::vector<std::size_t> redrawn(cfg.n, 0);
  parallel_for(cfg.n, resolve_threads(cfg.threads), [&](std::size_t i) {
    RandomStream rng(cfg.seed, i);
    auto& rec = out.records[i];
    rec.id = std::to_string(i + 1);
    while (!detail::draw_subject(rng, cfg, rec, out.truth[i])) ++redrawn[i];
  });
  for (auto c : redrawn) out.n_redrawn += c;
  return out;
}

}  // namespace picsurv
