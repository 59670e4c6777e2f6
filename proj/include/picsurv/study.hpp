#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "picsurv/mcmc.hpp"
#include "picsurv/pi_mle.hpp"
#include "picsurv/simulate.hpp"
#include "picsurv/text.hpp"

namespace picsurv {

// Point estimate with a 95% interval.
struct Estimate {
  double point = std::numeric_limits<double>::quiet_NaN();
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();
};

struct ReplicationResult {
  bool fit_ok = true;
  bool ci_ok = true;
  double max_rhat = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, Estimate> values;
};

// An estimator sees one simulated cohort plus a seed reserved for it.
using Estimator = std::function<ReplicationResult(const Cohort&, std::uint64_t seed)>;

struct StudyEstimand {
  std::string name;
  double truth = 0.0;
};

inline std::vector<Profile> strain_profiles() {
  return {{"strain16", {1.0, 0.0}, {0.0}}, {"strain18", {1.0, 1.0}, {1.0}}};
}

inline SummaryContext study_context() { return {strain_profiles(), {2.0, 5.0, 10.0}}; }

// Table order: alpha, lambda, (beta_pi, beta_delta) per covariate, gamma,
// then survival at each time, prevalence and cure per strain. The PI model
// has no cure component, so its beta_delta and cure rows are dropped.
inline std::vector<StudyEstimand> study_estimands(const PicParameters& truth, Model model) {
  std::vector<StudyEstimand> out{{"alpha", truth.alpha}, {"lambda", truth.lambda}};
  for (std::size_t j = 0; j < truth.beta_pi.size(); ++j) {
    out.push_back({"beta_pi_" + std::to_string(j + 1), truth.beta_pi[j]});
    if (model == Model::PIC) out.push_back({"beta_delta_" + std::to_string(j + 1), truth.beta_delta[j]});
  }
  for (std::size_t k = 0; k < truth.gamma.size(); ++k) {
    out.push_back({"gamma_" + std::to_string(k + 1), truth.gamma[k]});
  }
  const auto ctx = study_context();
  for (const auto& prof : ctx.profiles) {
    const std::string sfx = profile_suffix(prof);
    for (double t : ctx.times) {
      out.push_back({"survival(t=" + time_label(t) + ")" + sfx, marginal_survival(t, prof.x_mix, prof.x_inc, truth)});
    }
    const MixtureProbs m = mixture_probs(truth, prof.x_mix);
    out.push_back({"prevalence" + sfx, m.pi});
    if (model == Model::PIC) out.push_back({"cure" + sfx, m.delta});
  }
  return out;
}

// Posterior median and equal-tailed 95% credible interval.
inline Estimator make_pic_estimator(PicPriorSpec prior, SamplerConfig sampler) {
  return [prior = std::move(prior), sampler](const Cohort& cohort, std::uint64_t seed) {
    ReplicationResult res;
    SamplerConfig cfg = sampler;
    cfg.seed = seed;
    cfg.threads = 1;
    try {
      const ChainSet chains = sample_posterior(cohort.records, prior, Model::PIC, cfg);
      res.max_rhat = chains.max_rhat();
      for (const auto& row : summarize(chains, study_context())) {
        res.values[row.name] = {row.estimate, row.lower, row.upper};
      }
    } catch (const Error&) {
      res.fit_ok = false;
      res.ci_ok = false;
    }
    return res;
  };
}

// MLE point estimate with a percentile bootstrap interval. Non-converged fits
// and failed bootstraps are reported through fit_ok / ci_ok.
inline Estimator make_pi_estimator(PiFitConfig fit_cfg, int n_boot) {
  return [fit_cfg, n_boot](const Cohort& cohort, std::uint64_t seed) {
    ReplicationResult res;
    PiFitConfig cfg = fit_cfg;
    cfg.seed = derive_seed(seed, 0, 0);
    const PiFit fit = fit_pi_mle(cohort.records, cfg);
    if (!fit.converged) {
      res.fit_ok = false;
      res.ci_ok = false;
      return res;
    }
    const auto ctx = study_context();
    const auto names = pi_estimand_names(fit.layout, ctx);
    const auto point = pi_estimands(fit.point, ctx);
    for (std::size_t e = 0; e < names.size(); ++e) res.values[names[e]].point = point[e];
    try {
      const auto boot = bootstrap_ci(cohort.records, fit, n_boot, derive_seed(seed, 1, 0), ctx, 1, cfg);
      for (std::size_t e = 0; e < names.size(); ++e) {
        res.values[names[e]].lower = boot.lower[e];
        res.values[names[e]].upper = boot.upper[e];
      }
    } catch (const CIUnavailable&) {
      res.ci_ok = false;
    }
    return res;
  };
}

struct RawRow {
  int rep = 0;
  std::uint64_t seed = 0;
  std::string estimand;
  double truth = 0.0;
  double point = std::numeric_limits<double>::quiet_NaN();
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();
  bool fit_ok = true;
  bool ci_ok = true;
  double max_rhat = std::numeric_limits<double>::quiet_NaN();
  bool rhat_flag = false;  // max R-hat >= 1.1; included in metrics regardless
};

struct MetricsRow {
  std::string name;
  double truth = 0.0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double bias = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
  double coverage_pct = std::numeric_limits<double>::quiet_NaN();
  double ciw = std::numeric_limits<double>::quiet_NaN();
  int n_point = 0;
  int n_interval = 0;
};

struct StudyMetrics {
  std::vector<MetricsRow> rows;
  int n_reps = 0;
  int n_failed_fit = 0;
  int n_failed_ci = 0;
  int n_rhat_flagged = 0;
};

struct StudyConfig {
  int reps = 50;
  std::size_t n = 400;
  std::uint64_t seed = 1;
  Model model = Model::PIC;
  DgpConfig dgp;  // n and seed are overridden per replication
  int threads = 0;

  void validate() const {
    if (reps < 1) throw ConfigError("reps must be at least 1");
    if (n == 0) throw ConfigError("n must be positive");
  }
};

struct StudyResult {
  std::vector<RawRow> raw;
  StudyMetrics metrics;
  std::vector<std::uint64_t> data_seeds;
  std::vector<std::uint64_t> fit_seeds;
  std::size_t n_redrawn = 0;
};

inline std::uint64_t replication_data_seed(std::uint64_t seed, int rep) {
  return derive_seed(seed, 1, static_cast<std::uint64_t>(rep));
}
inline std::uint64_t replication_fit_seed(std::uint64_t seed, int rep) {
  return derive_seed(seed, 2, static_cast<std::uint64_t>(rep));
}

// Metrics from the raw table alone. Sums run over sorted terms, so the result
// does not depend on the order in which replications finished.
inline StudyMetrics aggregate(const std::vector<RawRow>& raw) {
  StudyMetrics m;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RawRow*>> by_name;
  std::map<int, std::pair<bool, bool>> reps;
  std::map<int, bool> flagged;
  for (const auto& r : raw) {
    auto& bucket = by_name[r.estimand];
    if (bucket.empty()) order.push_back(r.estimand);
    bucket.push_back(&r);
    auto [it, fresh] = reps.try_emplace(r.rep, r.fit_ok, r.ci_ok);
    if (!fresh) {
      it->second.first = it->second.first && r.fit_ok;
      it->second.second = it->second.second && r.ci_ok;
    }
    flagged[r.rep] = flagged[r.rep] || r.rhat_flag;
  }
  m.n_reps = static_cast<int>(reps.size());
  for (const auto& [rep, ok] : reps) {
    if (!ok.first) ++m.n_failed_fit;
    else if (!ok.second) ++m.n_failed_ci;
  }
  for (const auto& [rep, f] : flagged) m.n_rhat_flagged += f ? 1 : 0;

  for (const auto& name : order) {
    const auto& rows = by_name[name];
    MetricsRow out;
    out.name = name;
    out.truth = rows.front()->truth;
    std::vector<double> pts, errs, sq, widths, hits;
    for (const RawRow* r : rows) {
      if (!r->fit_ok || !std::isfinite(r->point)) continue;
      pts.push_back(r->point);
      errs.push_back(r->point - r->truth);
      sq.push_back((r->point - r->truth) * (r->point - r->truth));
      if (r->ci_ok && std::isfinite(r->lower) && std::isfinite(r->upper)) {
        widths.push_back(r->upper - r->lower);
        hits.push_back(r->lower <= r->truth && r->truth <= r->upper ? 1.0 : 0.0);
      }
    }
    out.n_point = static_cast<int>(pts.size());
    out.n_interval = static_cast<int>(widths.size());
    if (!pts.empty()) {
      const double k = static_cast<double>(pts.size());
      out.mean = ordered_sum(pts) / k;
      out.bias = ordered_sum(errs) / k;
      out.mse = ordered_sum(sq) / k;
    }
    if (!widths.empty()) {
      const double k = static_cast<double>(widths.size());
      out.coverage_pct = 100.0 * ordered_sum(hits) / k;
      out.ciw = ordered_sum(widths) / k;
    }
    m.rows.push_back(std::move(out));
  }
  return m;
}

// Replication r simulates from replication_data_seed(seed, r) and fits with
// replication_fit_seed(seed, r). Estimator failures are recorded, never thrown.
inline StudyResult run_study(const StudyConfig& cfg, const Estimator& estimator) {
  cfg.validate();
  const auto estimands = study_estimands(cfg.dgp.truth, cfg.model);
  const auto reps = static_cast<std::size_t>(cfg.reps);
  std::vector<std::vector<RawRow>> per_rep(reps);
  std::vector<std::size_t> redrawn(reps, 0);
  StudyResult out;
  for (int r = 0; r < cfg.reps; ++r) {
    out.data_seeds.push_back(replication_data_seed(cfg.seed, r));
    out.fit_seeds.push_back(replication_fit_seed(cfg.seed, r));
  }

  parallel_for(reps, resolve_threads(cfg.threads), [&](std::size_t r) {
    DgpConfig dgp = cfg.dgp;
    dgp.n = cfg.n;
    dgp.seed = out.data_seeds[r];
    dgp.threads = 1;
    const Cohort cohort = simulate_cohort(dgp);
    redrawn[r] = cohort.n_redrawn;
    ReplicationResult res;
    try {
      res = estimator(cohort, out.fit_seeds[r]);
    } catch (const std::exception&) {
      res = {};
      res.fit_ok = false;
      res.ci_ok = false;
    }
    for (const auto& e : estimands) {
      RawRow row;
      row.rep = static_cast<int>(r);
      row.seed = out.data_seeds[r];
      row.estimand = e.name;
      row.truth = e.truth;
      row.fit_ok = res.fit_ok;
      row.ci_ok = res.ci_ok;
      row.max_rhat = res.max_rhat;
      row.rhat_flag = std::isfinite(res.max_rhat) && res.max_rhat >= 1.1;
      if (auto it = res.values.find(e.name); it != res.values.end()) {
        row.point = it->second.point;
        row.lower = it->second.lower;
        row.upper = it->second.upper;
      }
      per_rep[r].push_back(std::move(row));
    }
  });
  for (auto& rows : per_rep) {
    for (auto& row : rows) out.raw.push_back(std::move(row));
  }
  for (auto c : redrawn) out.n_redrawn += c;
  out.metrics = aggregate(out.raw);
  return out;
}

inline const char* raw_csv_header() {
  return "rep,seed,estimand,truth,point,lower,upper,fit_ok,ci_ok,max_rhat,rhat_flag";
}

inline std::string render_raw_csv(const std::vector<RawRow>& raw) {
  std::ostringstream os;
  os << raw_csv_header() << '\n';
  for (const auto& r : raw) {
    os << r.rep << ',' << r.seed << ',' << r.estimand << ',' << format_double(r.truth) << ','
       << format_double(r.point) << ',' << format_double(r.lower) << ',' << format_double(r.upper) << ','
       << (r.fit_ok ? 1 : 0) << ',' << (r.ci_ok ? 1 : 0) << ',' << format_double(r.max_rhat) << ','
       << (r.rhat_flag ? 1 : 0) << '\n';
  }
  return os.str();
}

inline std::vector<RawRow> parse_raw_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != raw_csv_header()) throw ParseError("unexpected raw.csv header", 1);
  std::vector<RawRow> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const int line_no = static_cast<int>(i + 1);
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 11) throw ParseError("expected 11 fields", line_no);
    auto num = [&](const std::string& s) {
      auto v = try_parse_double(s);
      if (!v) throw ParseError("bad number '" + s + "'", line_no);
      return *v;
    };
    RawRow r;
    try {
      r.rep = std::stoi(f[0]);
      r.seed = std::stoull(f[1]);
    } catch (const std::exception&) {
      throw ParseError("bad replication index or seed", line_no);
    }
    r.estimand = f[2];
    r.truth = num(f[3]);
    r.point = num(f[4]);
    r.lower = num(f[5]);
    r.upper = num(f[6]);
    r.fit_ok = f[7] == "1";
    r.ci_ok = f[8] == "1";
    r.max_rhat = num(f[9]);
    r.rhat_flag = f[10] == "1";
    out.push_back(std::move(r));
  }
  return out;
}

enum class TableFormat { Csv, Markdown };

inline const char* metrics_csv_header() { return "estimand,truth,mean,bias,mse,coverage_pct,ciw,n_point,n_interval"; }

// CSV is lossless (shortest round-trip numbers); markdown is for reading.
inline std::string metrics_table_render(const StudyMetrics& m, TableFormat format) {
  std::ostringstream os;
  if (format == TableFormat::Csv) {
    os << metrics_csv_header() << '\n';
    for (const auto& r : m.rows) {
      os << r.name << ',' << format_double(r.truth) << ',' << format_double(r.mean) << ','
         << format_double(r.bias) << ',' << format_double(r.mse) << ',' << format_double(r.coverage_pct) << ','
         << format_double(r.ciw) << ',' << r.n_point << ',' << r.n_interval << '\n';
    }
    return os.str();
  }
  os << "| Estimand | True | Mean | Bias | MSE | Cov % | CIW |\n";
  os << "|---|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& r : m.rows) {
    os << "| " << r.name << " | " << format_fixed(r.truth, 3) << " | " << format_fixed(r.mean, 3) << " | "
       << format_fixed(r.bias, 3) << " | " << format_fixed(r.mse, 4) << " | " << format_fixed(r.coverage_pct, 1)
       << " | " << format_fixed(r.ciw, 3) << " |\n";
  }
  return os.str();
}

inline std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != metrics_csv_header()) throw ParseError("unexpected metrics header", 1);
  std::vector<MetricsRow> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const int line_no = static_cast<int>(i + 1);
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 9) throw ParseError("expected 9 fields", line_no);
    auto num = [&](const std::string& s) {
      auto v = try_parse_double(s);
      if (!v) throw ParseError("bad number '" + s + "'", line_no);
      return *v;
    };
    MetricsRow r;
    r.name = f[0];
    r.truth = num(f[1]);
    r.mean = num(f[2]);
    r.bias = num(f[3]);
    r.mse = num(f[4]);
    r.coverage_pct = num(f[5]);
    r.ciw = num(f[6]);
    r.n_point = static_cast<int>(num(f[7]));
    r.n_interval = static_cast<int>(num(f[8]));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace picsurv
