#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "picsurv/error.hpp"
#include "picsurv/numeric.hpp"

namespace picsurv {

namespace detail {

inline double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double var_of(std::span<const double> x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size() - 1);
}

inline void check_chains(std::span<const std::vector<double>> chains, std::size_t min_len) {
  if (chains.size() < 2) throw ConfigError("gelman_rubin: need at least 2 chains");
  const std::size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) throw ConfigError("gelman_rubin: chains differ in length");
  }
  if (n < min_len) throw ConfigError("gelman_rubin: chains shorter than " + std::to_string(min_len));
}

}  // namespace detail

// Split-chain potential scale reduction factor. Each chain is halved (the
// middle draw dropped when the length is odd). Returns +inf when the
// within-chain variance is zero but the halves disagree, 1 when every draw is
// identical. Values are floored at 1.
inline double gelman_rubin(std::span<const std::vector<double>> chains) {
  detail::check_chains(chains, 10);
  const std::size_t len = chains.front().size();
  const std::size_t n = len / 2;
  std::vector<double> means, vars;
  for (const auto& c : chains) {
    for (std::span<const double> half : {std::span<const double>(c.data(), n),
                                         std::span<const double>(c.data() + (len - n), n)}) {
      const double m = detail::mean_of(half);
      means.push_back(m);
      vars.push_back(detail::var_of(half, m));
    }
  }
  const double w = detail::mean_of(vars);
  const double b = static_cast<double>(n) * detail::var_of(means, detail::mean_of(means));
  if (w == 0.0) return b == 0.0 ? 1.0 : kInf;
  const double nd = static_cast<double>(n);
  const double var_plus = (nd - 1.0) / nd * w + b / nd;
  return std::max(1.0, std::sqrt(var_plus / w));
}

// Multi-chain effective sample size from pooled autocorrelations, truncated
// at the first negative pair sum (Geyer's initial positive sequence).
inline double effective_sample_size(std::span<const std::vector<double>> chains) {
  if (chains.empty() || chains.front().size() < 4) return 0.0;
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = detail::mean_of(chains[c]);
    vars[c] = detail::var_of(chains[c], means[c]);
  }
  const double w = detail::mean_of(vars);
  const double nd = static_cast<double>(n);
  double var_plus = w * (nd - 1.0) / nd;
  if (m > 1) var_plus += detail::var_of(means, detail::mean_of(means));
  if (var_plus <= 0.0) return static_cast<double>(m * n);

  auto rho = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const auto& x = chains[c];
      double s = 0.0;
      for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - means[c]) * (x[t + lag] - means[c]);
      acov += s / nd;
    }
    acov /= static_cast<double>(m);
    return 1.0 - (w - acov) / var_plus;
  };

  double tau = -1.0;  // 1 + 2 sum_{t>=1} rho_t = -1 + 2 sum over pairs from t=0
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    const double pair = rho(t) + rho(t + 1);
    if (pair < 0.0) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m * n)));
  return static_cast<double>(m * n) / tau;
}

}  // namespace picsurv
