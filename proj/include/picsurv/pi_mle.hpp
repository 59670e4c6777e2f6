#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "picsurv/likelihood.hpp"
#include "picsurv/mcmc.hpp"
#include "picsurv/parallel.hpp"
#include "picsurv/rng.hpp"

namespace picsurv {

struct PiFitConfig {
  int max_iter = 500;
  double tol = 1e-4;  // infinity norm of the log-likelihood gradient
  int restarts = 5;
  std::uint64_t seed = 1;
};

struct BootstrapResult {
  std::vector<std::string> names;
  std::vector<double> point;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::vector<double>> estimates;  // successful resamples x names
  int n_requested = 0;
  int n_failed = 0;
};

struct PiFit {
  ParamLayout layout{Model::PI, 1, 0};
  PicParameters point;            // beta_delta empty
  std::vector<double> theta;      // (log alpha, log lambda, beta_pi, gamma)
  std::vector<double> se;         // natural scale, same order as theta
  double loglik = kNegInf;
  double grad_norm = kInf;
  int iterations = 0;
  int restarts_converged = 0;
  bool gradient_converged = false;
  bool converged = false;         // gradient small and Hessian negative definite
  std::optional<BootstrapResult> bootstrap;
};

namespace detail {

struct BfgsResult {
  Eigen::VectorXd x;
  double f = kInf;
  double grad_norm = kInf;
  int iterations = 0;
  bool converged = false;
};

// Minimises -loglik with BFGS and Armijo backtracking.
inline BfgsResult maximise_pi_loglik(std::span<const ObservationRecord> data,
                                     const ObservedLikelihood& ll, const ParamLayout& lay,
                                     std::vector<double> start, const PiFitConfig& cfg) {
  const auto dim = static_cast<Eigen::Index>(lay.dim());
  auto value = [&](const Eigen::VectorXd& x) {
    const double v = ll(from_mle_scale(std::span<const double>(x.data(), x.size()), lay));
    return std::isfinite(v) ? -v : kInf;
  };
  auto gradient = [&](const Eigen::VectorXd& x) {
    const auto g = log_likelihood_gradient(data, std::span<const double>(x.data(), x.size()), lay);
    Eigen::VectorXd out(dim);
    for (Eigen::Index i = 0; i < dim; ++i) out[i] = -g[static_cast<std::size_t>(i)];
    return out;
  };

  BfgsResult res;
  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(start.data(), dim);
  double f = value(x);
  if (!std::isfinite(f)) return res;
  Eigen::VectorXd g = gradient(x);
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(dim, dim);
  bool scaled = false;

  for (int it = 0; it < cfg.max_iter; ++it) {
    res.iterations = it;
    if (!g.allFinite()) break;
    if (g.lpNorm<Eigen::Infinity>() < cfg.tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd d = -h_inv * g;
    if (g.dot(d) >= 0.0) {
      h_inv.setIdentity();
      d = -g;
    }
    const double dmax = d.lpNorm<Eigen::Infinity>();
    if (dmax > 2.0) d *= 2.0 / dmax;
    const double slope = g.dot(d);
    double step = 1.0, f_new = kInf;
    Eigen::VectorXd x_new;
    for (int k = 0; k < 60; ++k) {
      x_new = x + step * d;
      f_new = value(x_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) break;
      step *= 0.5;
    }
    if (!std::isfinite(f_new) || f_new > f + 1e-4 * step * slope) {
      // no descent possible along d: reset curvature once, otherwise stop
      if (h_inv.isIdentity()) break;
      h_inv.setIdentity();
      continue;
    }
    const Eigen::VectorXd g_new = gradient(x_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      if (!scaled) {
        h_inv *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
      h_inv = (eye - rho * s * y.transpose()) * h_inv * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    x = x_new;
    f = f_new;
    g = g_new;
  }
  res.x = x;
  res.f = f;
  res.grad_norm = g.allFinite() ? g.lpNorm<Eigen::Infinity>() : kInf;
  if (res.grad_norm < cfg.tol) res.converged = true;
  return res;
}

inline std::vector<double> pi_default_start(std::span<const ObservationRecord> data, const ParamLayout& lay) {
  std::vector<double> times;
  std::size_t positives = 0;
  for (const auto& r : data) {
    if (r.group == Group::C1 || r.group == Group::C4) ++positives;
    if (r.r > 0.0 && std::isfinite(r.r)) times.push_back(r.r);
  }
  std::vector<double> theta(lay.dim(), 0.0);
  theta[1] = times.empty() ? 0.0 : std::log(quantile(times, 0.5));
  const double frac = (static_cast<double>(positives) + 0.5) / (static_cast<double>(data.size()) + 1.0);
  theta[lay.beta_pi(0)] = std::log(frac / (1.0 - frac));
  return theta;
}

inline std::vector<double> perturbed_start(const std::vector<double>& base, const ParamLayout& lay,
                                           RandomStream& rng) {
  std::vector<double> theta = base;
  theta[0] = rng.normal(0.0, 0.5);
  theta[1] = base[1] + rng.normal(0.0, 0.5);
  for (std::size_t j = 0; j < lay.q_mix; ++j) theta[lay.beta_pi(j)] = base[lay.beta_pi(j)] + rng.normal();
  for (std::size_t k = 0; k < lay.q_inc; ++k) theta[lay.gamma(k)] = rng.normal(0.0, 0.5);
  return theta;
}

// Central differences of the analytic gradient, symmetrised.
inline Eigen::MatrixXd numeric_hessian(std::span<const ObservationRecord> data, const std::vector<double>& theta,
                                       const ParamLayout& lay, double h = 1e-5) {
  const auto dim = static_cast<Eigen::Index>(theta.size());
  Eigen::MatrixXd hess(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    auto plus = theta, minus = theta;
    plus[static_cast<std::size_t>(j)] += h;
    minus[static_cast<std::size_t>(j)] -= h;
    const auto gp = log_likelihood_gradient(data, plus, lay);
    const auto gm = log_likelihood_gradient(data, minus, lay);
    for (Eigen::Index i = 0; i < dim; ++i) {
      hess(i, j) = (gp[static_cast<std::size_t>(i)] - gm[static_cast<std::size_t>(i)]) / (2.0 * h);
    }
  }
  return 0.5 * (hess + hess.transpose());
}

}  // namespace detail

inline ParamLayout pi_layout(std::span<const ObservationRecord> data) {
  if (data.empty()) throw ConfigError("dataset is empty");
  return {Model::PI, data.front().x_mix.size(), data.front().x_inc.size()};
}

// Frequentist PI (logistic-Weibull) fit: BFGS from a data-driven start plus
// cfg.restarts - 1 dispersed random starts; the best gradient-converged
// optimum wins. converged also requires a negative-definite Hessian.
inline PiFit fit_pi_mle(std::span<const ObservationRecord> data, const PiFitConfig& cfg = {}) {
  const ParamLayout lay = pi_layout(data);
  const ObservedLikelihood ll(data, Model::PI);
  const auto base = detail::pi_default_start(data, lay);

  PiFit fit;
  fit.layout = lay;
  std::optional<detail::BfgsResult> best, best_any;
  for (int k = 0; k < std::max(1, cfg.restarts); ++k) {
    std::vector<double> start = base;
    if (k > 0) {
      RandomStream rng(cfg.seed, static_cast<std::uint64_t>(k));
      start = detail::perturbed_start(base, lay, rng);
    }
    auto res = detail::maximise_pi_loglik(data, ll, lay, start, cfg);
    if (res.x.size() == 0) continue;
    if (res.converged) {
      ++fit.restarts_converged;
      if (!best || res.f < best->f) best = res;
    }
    if (!best_any || res.f < best_any->f) best_any = res;
  }
  const auto& chosen = best ? best : best_any;
  if (!chosen) return fit;

  fit.theta.assign(chosen->x.data(), chosen->x.data() + chosen->x.size());
  fit.point = from_mle_scale(fit.theta, lay);
  fit.loglik = -chosen->f;
  fit.grad_norm = chosen->grad_norm;
  fit.iterations = chosen->iterations;
  fit.gradient_converged = chosen->converged;
  fit.se.assign(fit.theta.size(), std::numeric_limits<double>::quiet_NaN());
  if (fit.gradient_converged) {
    const Eigen::MatrixXd neg_h = -detail::numeric_hessian(data, fit.theta, lay);
    Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
    if (llt.info() == Eigen::Success) {
      fit.converged = true;
      const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(neg_h.rows(), neg_h.cols()));
      for (std::size_t i = 0; i < fit.theta.size(); ++i) {
        const double s = std::sqrt(cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
        fit.se[i] = i < 2 ? s * std::exp(fit.theta[i]) : s;
      }
    }
  }
  return fit;
}

inline void require_converged(const PiFit& fit) {
  if (!fit.converged) throw NonConvergence("PI maximum likelihood fit did not converge");
}

// Natural-scale parameters followed by prevalence and survival(t) per profile.
inline std::vector<std::string> pi_estimand_names(const ParamLayout& lay, const SummaryContext& ctx) {
  std::vector<std::string> names{"alpha", "lambda", "m_tilde"};
  for (std::size_t j = 0; j < lay.q_mix; ++j) names.push_back("beta_pi_" + std::to_string(j + 1));
  for (std::size_t k = 0; k < lay.q_inc; ++k) names.push_back("gamma_" + std::to_string(k + 1));
  for (const auto& prof : ctx.profiles) {
    names.push_back("prevalence" + profile_suffix(prof));
    for (double t : ctx.times) names.push_back("survival(t=" + time_label(t) + ")" + profile_suffix(prof));
  }
  return names;
}

inline std::vector<double> pi_estimands(const PicParameters& p, const SummaryContext& ctx) {
  std::vector<double> v{p.alpha, p.lambda, p.median_time()};
  v.insert(v.end(), p.beta_pi.begin(), p.beta_pi.end());
  v.insert(v.end(), p.gamma.begin(), p.gamma.end());
  for (const auto& prof : ctx.profiles) {
    const MixtureProbs m = mixture_probs(p, prof.x_mix);
    v.push_back(m.pi);
    for (double t : ctx.times) v.push_back(m.incident * weibull_survival(t, p, prof.x_inc));
  }
  return v;
}

// Nonparametric case-resampling bootstrap with percentile intervals. Each
// resample refits from the full-data optimum (then from two dispersed
// starts if that fails); resample b uses substream b of seed.
inline BootstrapResult bootstrap_ci(std::span<const ObservationRecord> data, const PiFit& fit, int n_boot,
                                    std::uint64_t seed, const SummaryContext& ctx, int threads = 0,
                                    const PiFitConfig& cfg = {}) {
  if (n_boot < 100) throw ConfigError("bootstrap needs at least 100 resamples");
  if (!fit.gradient_converged || fit.theta.empty()) {
    throw ConfigError("bootstrap requires a converged point estimate");
  }
  const ParamLayout lay = fit.layout;
  BootstrapResult out;
  out.names = pi_estimand_names(lay, ctx);
  out.point = pi_estimands(fit.point, ctx);
  out.n_requested = n_boot;

  const auto nb = static_cast<std::size_t>(n_boot);
  std::vector<std::optional<std::vector<double>>> results(nb);
  parallel_for(nb, resolve_threads(threads), [&](std::size_t b) {
    RandomStream rng(seed, b);
    std::vector<ObservationRecord> sample;
    sample.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) sample.push_back(data[rng.index(data.size())]);
    const ObservedLikelihood ll(sample, Model::PI);
    for (int attempt = 0; attempt < 3; ++attempt) {
      const auto start = attempt == 0 ? fit.theta : detail::perturbed_start(fit.theta, lay, rng);
      const auto res = detail::maximise_pi_loglik(sample, ll, lay, start, cfg);
      if (res.converged && res.x.allFinite()) {
        const std::vector<double> th(res.x.data(), res.x.data() + res.x.size());
        results[b] = pi_estimands(from_mle_scale(th, lay), ctx);
        return;
      }
    }
  });

  for (auto& r : results) {
    if (r) out.estimates.push_back(std::move(*r));
    else ++out.n_failed;
  }
  if (out.n_failed * 5 > n_boot) {
    throw CIUnavailable(std::to_string(out.n_failed) + " of " + std::to_string(n_boot) +
                        " bootstrap refits failed");
  }
  const std::size_t k = out.names.size();
  out.lower.resize(k);
  out.upper.resize(k);
  for (std::size_t e = 0; e < k; ++e) {
    std::vector<double> col;
    col.reserve(out.estimates.size());
    for (const auto& row : out.estimates) col.push_back(row[e]);
    std::sort(col.begin(), col.end());
    out.lower[e] = quantile_sorted(col, 0.025);
    out.upper[e] = quantile_sorted(col, 0.975);
  }
  return out;
}

}  // namespace picsurv
