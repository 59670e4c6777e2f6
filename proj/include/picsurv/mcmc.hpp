#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "picsurv/diagnostics.hpp"
#include "picsurv/likelihood.hpp"
#include "picsurv/parallel.hpp"
#include "picsurv/priors.hpp"
#include "picsurv/rng.hpp"

namespace picsurv {

struct SamplerConfig {
  int n_chains = 4;
  int n_adapt = 2000;
  int n_burnin = 5000;
  int n_keep = 10000;
  int thin = 1;
  std::uint64_t seed = 1;
  std::optional<std::vector<double>> init;  // sampling scale; prior draws when empty
  double target_accept = 0.44;
  bool use_likelihood = true;  // false samples the prior
  int threads = 0;             // 0: PICSURV_THREADS or 1

  void validate() const {
    if (n_chains < 1) throw ConfigError("n_chains must be positive");
    if (n_adapt < 1) throw ConfigError("n_adapt must be positive");
    if (n_burnin < 1) throw ConfigError("n_burnin must be positive");
    if (n_keep < 1) throw ConfigError("n_keep must be positive");
    if (thin < 1) throw ConfigError("thin must be at least 1");
    if (!(target_accept > 0.0 && target_accept < 1.0)) {
      throw ConfigError("target_accept must lie in (0, 1)");
    }
  }
};

struct ChainSet {
  ParamLayout layout;
  std::size_t n_draws = 0;                  // retained draws per chain
  std::vector<std::vector<double>> draws;   // per chain, row-major n_draws x dim
  std::vector<double> accept_rates;         // per coordinate, post-adaptation
  std::vector<double> step_sizes;           // per coordinate, mean over chains
  std::vector<double> rhat;                 // per coordinate (NaN if not computable)
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> streams;       // substream index per chain
  std::vector<std::string> warnings;

  std::size_t n_chains() const { return draws.size(); }
  std::size_t dim() const { return layout.dim(); }

  double at(std::size_t chain, std::size_t iter, std::size_t coord) const {
    return draws[chain][iter * dim() + coord];
  }
  std::vector<double> theta(std::size_t chain, std::size_t iter) const {
    const auto* row = draws[chain].data() + iter * dim();
    return {row, row + dim()};
  }
  std::vector<std::vector<double>> traces(std::size_t coord) const {
    std::vector<std::vector<double>> out(n_chains(), std::vector<double>(n_draws));
    for (std::size_t c = 0; c < n_chains(); ++c) {
      for (std::size_t i = 0; i < n_draws; ++i) out[c][i] = at(c, i, coord);
    }
    return out;
  }
  double max_rhat() const {
    double m = 1.0;
    for (double r : rhat) {
      if (std::isnan(r)) continue;
      m = std::max(m, r);
    }
    return m;
  }
};

// Split-R-hat of per-chain traces, or NaN when too short to compute.
inline double rhat_or_nan(std::span<const std::vector<double>> traces) {
  if (traces.size() < 2 || traces.front().size() < 10) return std::numeric_limits<double>::quiet_NaN();
  return gelman_rubin(traces);
}

inline std::vector<std::string> dataset_warnings(std::span<const ObservationRecord> data, Model model) {
  std::size_t count[5] = {0, 0, 0, 0, 0};
  for (const auto& r : data) ++count[group_number(r.group)];
  std::vector<std::string> out;
  if (count[1] == 0 && count[4] == 0) {
    out.push_back("no C1 or C4 records: prevalence is identified by the prior only");
  }
  if (count[2] == 0 && count[4] == 0) {
    out.push_back("no C2 or C4 records: incidence times are identified by the prior only");
  }
  if (model == Model::PIC && count[3] == 0) {
    out.push_back("no C3 records: cure fraction is identified by the prior only");
  }
  return out;
}

namespace detail {

enum class CoordKind { Survival, Mixture };

class ChainRunner {
 public:
  ChainRunner(const ObservedLikelihood* ll, const std::vector<NormalSpec>& priors,
              const ParamLayout& lay)
      : ll_(ll), priors_(priors), lay_(lay) {}

  double log_prior(std::span<const double> theta) const {
    double s = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) s += normal_log_pdf(theta[i], priors_[i].mu, priors_[i].sigma);
    return s;
  }

  CoordKind kind(std::size_t j) const {
    if (j < 2 || j >= lay_.gamma(0)) return CoordKind::Survival;
    return CoordKind::Mixture;
  }

  void mixture(std::span<const double> theta, ObservedLikelihood::MixtureState& out) const {
    const auto beta_pi = theta.subspan(lay_.beta_pi(0), lay_.q_mix);
    const auto beta_delta = lay_.model == Model::PIC ? theta.subspan(lay_.beta_delta(0), lay_.q_mix)
                                                    : std::span<const double>{};
    ll_->compute_mixture(beta_pi, beta_delta, out);
  }

  void survival(std::span<const double> theta, ObservedLikelihood::SurvivalState& out) const {
    const double alpha = std::exp(theta[0]);
    const double lambda = median_to_scale(std::exp(theta[1]), alpha);
    ll_->compute_survival(alpha, lambda, theta.subspan(lay_.gamma(0), lay_.q_inc), out);
  }

  void run(const SamplerConfig& cfg, std::uint64_t stream, std::vector<double>& out_draws,
           std::vector<double>& accept, std::vector<double>& steps) const {
    const std::size_t dim = lay_.dim();
    RandomStream rng(cfg.seed, stream);

    std::vector<double> theta;
    double lp_cur = kNegInf, ll_cur = 0.0;
    ObservedLikelihood::MixtureState mix_cur, mix_prop;
    ObservedLikelihood::SurvivalState surv_cur, surv_prop;

    auto evaluate = [&](const std::vector<double>& th) {
      if (!ll_) return 0.0;
      mixture(th, mix_cur);
      survival(th, surv_cur);
      return ll_->combine(mix_cur, surv_cur);
    };

    if (cfg.init) {
      theta = *cfg.init;
      if (theta.size() != dim) throw DimensionMismatch("custom init has wrong length");
      ll_cur = evaluate(theta);
      lp_cur = log_prior(theta);
      if (!std::isfinite(ll_cur + lp_cur)) throw NonFiniteInit("custom init has zero posterior density");
    } else {
      bool ok = false;
      for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        theta.resize(dim);
        for (std::size_t i = 0; i < dim; ++i) theta[i] = rng.normal(priors_[i].mu, priors_[i].sigma);
        ll_cur = evaluate(theta);
        lp_cur = log_prior(theta);
        ok = std::isfinite(ll_cur + lp_cur);
      }
      if (!ok) throw NonFiniteInit("no finite-posterior prior draw after 100 attempts");
    }

    std::vector<double> log_step(dim);
    for (std::size_t i = 0; i < dim; ++i) log_step[i] = std::log(0.5 * std::min(priors_[i].sigma, 1.0));
    std::vector<std::size_t> n_acc(dim, 0);
    std::size_t n_post = 0;

    const int total = cfg.n_adapt + cfg.n_burnin + cfg.n_keep * cfg.thin;
    out_draws.clear();
    out_draws.reserve(static_cast<std::size_t>(cfg.n_keep) * dim);
    std::vector<double> proposal = theta;

    for (int it = 0; it < total; ++it) {
      const bool adapting = it < cfg.n_adapt;
      for (std::size_t j = 0; j < dim; ++j) {
        const double old = theta[j];
        proposal[j] = old + std::exp(log_step[j]) * rng.normal();
        const auto& pr = priors_[j];
        const double d_prior = normal_log_pdf(proposal[j], pr.mu, pr.sigma) - normal_log_pdf(old, pr.mu, pr.sigma);
        double ll_prop = 0.0;
        if (ll_) {
          if (kind(j) == CoordKind::Survival) {
            survival(proposal, surv_prop);
            ll_prop = ll_->combine(mix_cur, surv_prop);
          } else {
            mixture(proposal, mix_prop);
            ll_prop = ll_->combine(mix_prop, surv_cur);
          }
        }
        const double log_ratio = ll_prop - ll_cur + d_prior;
        const bool accepted = std::isfinite(ll_prop) && std::log(rng.uniform()) < log_ratio;
        if (accepted) {
          theta[j] = proposal[j];
          ll_cur = ll_prop;
          if (ll_) {
            if (kind(j) == CoordKind::Survival) std::swap(surv_cur, surv_prop);
            else std::swap(mix_cur, mix_prop);
          }
        } else {
          proposal[j] = old;
        }
        if (adapting) {
          const double gain = std::pow(static_cast<double>(it) + 1.0, -0.6);
          log_step[j] += gain * ((accepted ? 1.0 : 0.0) - cfg.target_accept);
        } else if (accepted) {
          ++n_acc[j];
        }
      }
      if (!adapting) ++n_post;
      const int kept_index = it - cfg.n_adapt - cfg.n_burnin;
      if (kept_index >= 0 && kept_index % cfg.thin == cfg.thin - 1) {
        out_draws.insert(out_draws.end(), theta.begin(), theta.end());
      }
    }
    accept.assign(dim, 0.0);
    steps.assign(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
      accept[j] = static_cast<double>(n_acc[j]) / static_cast<double>(n_post);
      steps[j] = std::exp(log_step[j]);
    }
  }

 private:
  const ObservedLikelihood* ll_;
  std::vector<NormalSpec> priors_;
  ParamLayout lay_;
};

}  // namespace detail

inline ParamLayout layout_for(std::span<const ObservationRecord> data, const PicPriorSpec& prior,
                              Model model) {
  if (!data.empty()) return {model, data.front().x_mix.size(), data.front().x_inc.size()};
  return {model, prior.beta_pi.size(), prior.gamma.size()};
}

// Component-wise adaptive random-walk Metropolis on the sampling scale.
// Adaptation draws and burn-in are discarded. Deterministic given the seed
// regardless of thread count: chain c uses substream c of cfg.seed.
inline ChainSet sample_posterior(std::span<const ObservationRecord> data, const PicPriorSpec& prior,
                                 Model model, const SamplerConfig& cfg) {
  cfg.validate();
  if (data.empty() && cfg.use_likelihood) throw ConfigError("dataset is empty");
  const ParamLayout lay = layout_for(data, prior, model);
  const auto priors = sampling_scale_priors(for_model(prior, model), lay);

  std::optional<ObservedLikelihood> ll;
  if (cfg.use_likelihood) ll.emplace(data, model);
  detail::ChainRunner runner(ll ? &*ll : nullptr, priors, lay);

  ChainSet out;
  out.layout = lay;
  out.seed = cfg.seed;
  out.n_draws = static_cast<std::size_t>(cfg.n_keep);
  if (cfg.use_likelihood) out.warnings = dataset_warnings(data, model);
  const auto n_chains = static_cast<std::size_t>(cfg.n_chains);
  out.draws.resize(n_chains);
  std::vector<std::vector<double>> acc(n_chains), steps(n_chains);
  for (std::size_t c = 0; c < n_chains; ++c) out.streams.push_back(c);

  parallel_for(n_chains, resolve_threads(cfg.threads), [&](std::size_t c) {
    runner.run(cfg, out.streams[c], out.draws[c], acc[c], steps[c]);
  });

  const std::size_t dim = lay.dim();
  out.accept_rates.assign(dim, 0.0);
  out.step_sizes.assign(dim, 0.0);
  for (std::size_t c = 0; c < n_chains; ++c) {
    for (std::size_t j = 0; j < dim; ++j) {
      out.accept_rates[j] += acc[c][j] / static_cast<double>(n_chains);
      out.step_sizes[j] += steps[c][j] / static_cast<double>(n_chains);
    }
  }
  out.rhat.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) out.rhat[j] = rhat_or_nan(out.traces(j));
  return out;
}

// Covariate profile at which derived quantities are evaluated.
struct Profile {
  std::string name;
  std::vector<double> x_mix;
  std::vector<double> x_inc;
};

// Posterior draws of prevalence, cure and marginal survival; indexed
// [chain][draw], survival additionally by time first.
struct DerivedDraws {
  std::vector<std::vector<double>> pi;
  std::vector<std::vector<double>> delta;
  std::vector<std::vector<std::vector<double>>> survival;
};

inline DerivedDraws derived_quantities(const ChainSet& chains, std::span<const double> x_mix,
                                       std::span<const double> x_inc, std::span<const double> t_grid) {
  const auto& lay = chains.layout;
  if (x_mix.size() != lay.q_mix || x_inc.size() != lay.q_inc) {
    throw DimensionMismatch("derived_quantities: covariate profile does not match the fitted model");
  }
  DerivedDraws out;
  const std::size_t m = chains.n_chains(), n = chains.n_draws;
  out.pi.assign(m, std::vector<double>(n));
  out.delta.assign(m, std::vector<double>(n));
  out.survival.assign(t_grid.size(), std::vector<std::vector<double>>(m, std::vector<double>(n)));
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const PicParameters p = from_sampling_scale(chains.theta(c, i), lay);
      const MixtureProbs mp = mixture_probs(p, x_mix);
      out.pi[c][i] = mp.pi;
      out.delta[c][i] = mp.delta;
      for (std::size_t k = 0; k < t_grid.size(); ++k) {
        out.survival[k][c][i] = mp.delta + mp.incident * weibull_survival(t_grid[k], p, x_inc);
      }
    }
  }
  return out;
}

struct SummaryRow {
  std::string name;
  double estimate = 0.0;  // posterior median (MCMC) or point estimate (MLE)
  double lower = 0.0;     // 2.5%
  double upper = 0.0;     // 97.5%
  double rhat = std::numeric_limits<double>::quiet_NaN();
  double ess = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
};

struct SummaryContext {
  std::vector<Profile> profiles;
  std::vector<double> times;
};

inline std::string profile_suffix(const Profile& p) {
  return (p.name.empty() || p.name == "base") ? std::string() : "[" + p.name + "]";
}

inline std::string time_label(double t) {
  std::string s = std::to_string(t);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

inline SummaryRow summarize_traces(std::string name, const std::vector<std::vector<double>>& traces) {
  std::vector<double> pooled;
  for (const auto& t : traces) pooled.insert(pooled.end(), t.begin(), t.end());
  std::sort(pooled.begin(), pooled.end());
  SummaryRow row;
  row.name = std::move(name);
  row.estimate = quantile_sorted(pooled, 0.5);
  row.lower = quantile_sorted(pooled, 0.025);
  row.upper = quantile_sorted(pooled, 0.975);
  row.rhat = rhat_or_nan(traces);
  row.ess = effective_sample_size(traces);
  return row;
}

// Median, 95% credible interval, split-R-hat and ESS for every natural-scale
// parameter and every derived quantity requested in ctx.
inline std::vector<SummaryRow> summarize(const ChainSet& chains, const SummaryContext& ctx) {
  const auto& lay = chains.layout;
  std::vector<SummaryRow> rows;
  auto mapped = [&](std::size_t coord, auto fn) {
    auto tr = chains.traces(coord);
    for (auto& chain : tr) for (double& v : chain) v = fn(v);
    return tr;
  };
  auto ident = [](double v) { return v; };
  auto expo = [](double v) { return std::exp(v); };

  rows.push_back(summarize_traces("alpha", mapped(0, expo)));
  {
    auto tr = chains.traces(1);
    for (std::size_t c = 0; c < tr.size(); ++c) {
      for (std::size_t i = 0; i < tr[c].size(); ++i) {
        tr[c][i] = median_to_scale(std::exp(tr[c][i]), std::exp(chains.at(c, i, 0)));
      }
    }
    rows.push_back(summarize_traces("lambda", tr));
  }
  rows.push_back(summarize_traces("m_tilde", mapped(1, expo)));
  for (std::size_t j = 0; j < lay.q_mix; ++j) {
    rows.push_back(summarize_traces("beta_pi_" + std::to_string(j + 1), mapped(lay.beta_pi(j), ident)));
  }
  if (lay.model == Model::PIC) {
    for (std::size_t j = 0; j < lay.q_mix; ++j) {
      rows.push_back(summarize_traces("beta_delta_" + std::to_string(j + 1), mapped(lay.beta_delta(j), ident)));
    }
  }
  for (std::size_t k = 0; k < lay.q_inc; ++k) {
    rows.push_back(summarize_traces("gamma_" + std::to_string(k + 1), mapped(lay.gamma(k), ident)));
  }
  for (const auto& prof : ctx.profiles) {
    const DerivedDraws d = derived_quantities(chains, prof.x_mix, prof.x_inc, ctx.times);
    const std::string sfx = profile_suffix(prof);
    rows.push_back(summarize_traces("prevalence" + sfx, d.pi));
    if (lay.model == Model::PIC) rows.push_back(summarize_traces("cure" + sfx, d.delta));
    for (std::size_t k = 0; k < ctx.times.size(); ++k) {
      rows.push_back(summarize_traces("survival(t=" + time_label(ctx.times[k]) + ")" + sfx, d.survival[k]));
    }
  }
  return rows;
}

}  // namespace picsurv
