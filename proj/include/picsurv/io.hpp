#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "picsurv/mcmc.hpp"
#include "picsurv/pi_mle.hpp"
#include "picsurv/priors.hpp"
#include "picsurv/simulate.hpp"
#include "picsurv/text.hpp"
#include "picsurv/turnbull.hpp"

#ifndef PICSURV_VERSION
#define PICSURV_VERSION "0.1.0"
#endif

namespace picsurv {

inline const char* version() { return PICSURV_VERSION; }

// Raw dataset table: id, left, right and named covariate columns.
struct DatasetRow {
  std::string id;
  double l = kNegInf;
  double r = kInf;
  std::vector<double> covariates;
};

struct Dataset {
  std::vector<std::string> columns;
  std::vector<DatasetRow> rows;

  std::size_t column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw ConfigError("covariate column '" + name + "' not found in dataset");
  }
};

inline Dataset parse_dataset_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError("empty dataset file", 1);
  const auto header = split_csv_line(lines.front());
  if (header.size() < 3 || header[0] != "id" || header[1] != "left" || header[2] != "right") {
    throw ParseError("header must start with id,left,right", 1);
  }
  Dataset ds;
  std::set<std::string> seen;
  for (std::size_t i = 3; i < header.size(); ++i) {
    if (header[i].empty()) throw ParseError("empty covariate column name", 1);
    if (!seen.insert(header[i]).second) throw ParseError("duplicate column '" + header[i] + "'", 1);
    ds.columns.push_back(header[i]);
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t line_no = i + 1;
    const auto f = split_csv_line(lines[i]);
    if (f.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()),
                       line_no);
    }
    auto num = [&](const std::string& s, const std::string& col) {
      const auto v = try_parse_double(s);
      if (!v || std::isnan(*v)) throw ParseError("bad value '" + s + "' in column '" + col + "'", line_no);
      return *v;
    };
    DatasetRow row;
    row.id = f[0];
    row.l = num(f[1], "left");
    row.r = num(f[2], "right");
    try {
      classify(row.l, row.r);
    } catch (const IllegalInterval& e) {
      throw ParseError(e.what(), line_no);
    }
    for (std::size_t c = 3; c < f.size(); ++c) {
      row.covariates.push_back(num(f[c], header[c]));
      if (!std::isfinite(row.covariates.back())) throw ParseError("covariate must be finite", line_no);
    }
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

inline std::string render_dataset_csv(const Dataset& ds) {
  std::ostringstream os;
  os << "id,left,right";
  for (const auto& c : ds.columns) os << ',' << c;
  os << '\n';
  for (const auto& row : ds.rows) {
    os << row.id << ',' << format_double(row.l) << ',' << format_double(row.r);
    for (double v : row.covariates) os << ',' << format_double(v);
    os << '\n';
  }
  return os.str();
}

// Simulated cohorts carry one covariate, the strain 18 indicator.
inline Dataset cohort_dataset(const Cohort& cohort) {
  Dataset ds;
  ds.columns = {"strain18"};
  for (const auto& rec : cohort.records) ds.rows.push_back({rec.id, rec.l, rec.r, {rec.x_inc.at(0)}});
  return ds;
}

inline std::string render_truth_csv(const Cohort& cohort) {
  std::ostringstream os;
  os << "id,status,event_time\n";
  for (std::size_t i = 0; i < cohort.records.size(); ++i) {
    os << cohort.records[i].id << ',' << status_name(cohort.truth[i].status) << ','
       << format_double(cohort.truth[i].event_time) << '\n';
  }
  return os.str();
}

struct CovariateRoles {
  std::vector<std::string> mix;
  std::vector<std::string> inc;
};

// Column means subtracted from each covariate when centering is on.
struct Centering {
  bool enabled = false;
  std::map<std::string, double> means;
};

inline Centering compute_centering(const Dataset& ds, const CovariateRoles& roles, bool enabled) {
  Centering c;
  c.enabled = enabled;
  if (!enabled || ds.rows.empty()) return c;
  std::set<std::string> used(roles.mix.begin(), roles.mix.end());
  used.insert(roles.inc.begin(), roles.inc.end());
  for (const auto& name : used) {
    const std::size_t idx = ds.column_index(name);
    std::vector<double> col;
    for (const auto& row : ds.rows) col.push_back(row.covariates[idx]);
    c.means[name] = ordered_sum(col) / static_cast<double>(col.size());
  }
  return c;
}

inline double centered(const Centering& c, const std::string& name, double v) {
  if (!c.enabled) return v;
  auto it = c.means.find(name);
  return it == c.means.end() ? v : v - it->second;
}

// x_mix gets a leading intercept; x_inc does not.
inline std::vector<ObservationRecord> build_records(const Dataset& ds, const CovariateRoles& roles,
                                                    const Centering& centering) {
  std::vector<std::size_t> mix_idx, inc_idx;
  for (const auto& n : roles.mix) mix_idx.push_back(ds.column_index(n));
  for (const auto& n : roles.inc) inc_idx.push_back(ds.column_index(n));
  std::vector<ObservationRecord> out;
  out.reserve(ds.rows.size());
  for (const auto& row : ds.rows) {
    std::vector<double> x_mix{1.0}, x_inc;
    for (std::size_t k = 0; k < mix_idx.size(); ++k) {
      x_mix.push_back(centered(centering, roles.mix[k], row.covariates[mix_idx[k]]));
    }
    for (std::size_t k = 0; k < inc_idx.size(); ++k) {
      x_inc.push_back(centered(centering, roles.inc[k], row.covariates[inc_idx[k]]));
    }
    out.push_back(make_record(row.id, row.l, row.r, std::move(x_mix), std::move(x_inc)));
  }
  return out;
}

struct RunConfig {
  Model model = Model::PIC;
  PicPriorSpec prior = preset(Preset::VagueCervical);
  std::string prior_source = "vague";  // preset name or "inline"
  SamplerConfig sampler;
  PiFitConfig pi;
  int bootstrap = 500;
  std::uint64_t bootstrap_seed = 1;
  CovariateRoles covariates;
  bool center = false;
  std::string time_unit = "years";
  // Profiles as raw covariate values by column name; missing columns are 0.
  std::vector<std::pair<std::string, std::map<std::string, double>>> profiles;
  std::vector<double> times;
};

inline RunConfig parse_run_config(const nlohmann::json& j) {
  static const std::set<std::string> known{"model", "prior", "sampler", "pi", "bootstrap", "bootstrap_seed",
                                           "covariates", "center", "time_unit", "profiles", "times"};
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown run config key '" + key + "'");
  }
  RunConfig rc;
  try {
    const std::string model = j.value("model", std::string("pic"));
    if (model == "pic") rc.model = Model::PIC;
    else if (model == "pi") rc.model = Model::PI;
    else throw ConfigError("model must be \"pic\" or \"pi\"");

    if (j.contains("prior")) {
      const auto& p = j.at("prior");
      if (p.is_string()) {
        rc.prior_source = preset_name(parse_preset(p.get<std::string>()));
        rc.prior = preset(parse_preset(p.get<std::string>()));
      } else {
        rc.prior_source = "inline";
        rc.prior = p.get<PicPriorSpec>();
      }
    }
    rc.time_unit = j.value("time_unit", rc.prior.time_unit);

    if (j.contains("sampler")) {
      const auto& s = j.at("sampler");
      rc.sampler.n_chains = s.value("n_chains", rc.sampler.n_chains);
      rc.sampler.n_adapt = s.value("n_adapt", rc.sampler.n_adapt);
      rc.sampler.n_burnin = s.value("n_burnin", rc.sampler.n_burnin);
      rc.sampler.n_keep = s.value("n_keep", rc.sampler.n_keep);
      rc.sampler.thin = s.value("thin", rc.sampler.thin);
      rc.sampler.seed = s.value("seed", rc.sampler.seed);
      rc.sampler.target_accept = s.value("target_accept", rc.sampler.target_accept);
      if (s.contains("init")) rc.sampler.init = s.at("init").get<std::vector<double>>();
    }
    rc.sampler.validate();
    if (j.contains("pi")) {
      const auto& p = j.at("pi");
      rc.pi.max_iter = p.value("max_iter", rc.pi.max_iter);
      rc.pi.tol = p.value("tol", rc.pi.tol);
      rc.pi.restarts = p.value("restarts", rc.pi.restarts);
      rc.pi.seed = p.value("seed", rc.pi.seed);
    }
    rc.bootstrap = j.value("bootstrap", rc.bootstrap);
    rc.bootstrap_seed = j.value("bootstrap_seed", rc.bootstrap_seed);
    if (j.contains("covariates")) {
      const auto& c = j.at("covariates");
      rc.covariates.mix = c.value("mix", std::vector<std::string>{});
      rc.covariates.inc = c.value("inc", std::vector<std::string>{});
    }
    rc.center = j.value("center", false);
    if (j.contains("profiles")) {
      for (const auto& p : j.at("profiles")) {
        rc.profiles.emplace_back(p.at("name").get<std::string>(),
                                 p.value("values", std::map<std::string, double>{}));
      }
    }
    rc.times = j.value("times", std::vector<double>{});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  for (double t : rc.times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("times must be finite and non-negative");
  }
  return rc;
}

// Resolves named profiles to model-scale covariate vectors. Without any
// profiles the reference group (all model-scale covariates zero) is used.
inline std::vector<Profile> resolve_profiles(const RunConfig& rc, const Dataset& ds, const Centering& c) {
  std::vector<Profile> out;
  if (rc.profiles.empty()) {
    out.push_back({"base", std::vector<double>(rc.covariates.mix.size() + 1, 0.0), std::vector<double>(rc.covariates.inc.size(), 0.0)});
    out.front().x_mix[0] = 1.0;
    return out;
  }
  for (const auto& [name, values] : rc.profiles) {
    for (const auto& [col, _] : values) ds.column_index(col);
    auto raw = [&](const std::string& col) {
      auto it = values.find(col);
      return it == values.end() ? 0.0 : it->second;
    };
    Profile p{name, {1.0}, {}};
    for (const auto& col : rc.covariates.mix) p.x_mix.push_back(centered(c, col, raw(col)));
    for (const auto& col : rc.covariates.inc) p.x_inc.push_back(centered(c, col, raw(col)));
    out.push_back(std::move(p));
  }
  return out;
}

inline std::string render_draws_csv(const ChainSet& chains) {
  const auto& lay = chains.layout;
  std::ostringstream os;
  os << "chain,iter,alpha,lambda,m_tilde";
  for (std::size_t j = 0; j < lay.q_mix; ++j) os << ",beta_pi_" << j + 1;
  if (lay.model == Model::PIC) {
    for (std::size_t j = 0; j < lay.q_mix; ++j) os << ",beta_delta_" << j + 1;
  }
  for (std::size_t k = 0; k < lay.q_inc; ++k) os << ",gamma_" << k + 1;
  os << '\n';
  for (std::size_t c = 0; c < chains.n_chains(); ++c) {
    for (std::size_t i = 0; i < chains.n_draws; ++i) {
      const auto theta = chains.theta(c, i);
      const PicParameters p = from_sampling_scale(theta, lay);
      os << c + 1 << ',' << i + 1 << ',' << format_double(p.alpha) << ',' << format_double(p.lambda) << ','
         << format_double(std::exp(theta[1]));
      for (std::size_t j = 2; j < theta.size(); ++j) os << ',' << format_double(theta[j]);
      os << '\n';
    }
  }
  return os.str();
}

inline nlohmann::json rows_json(const std::vector<SummaryRow>& rows) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"name", r.name},
                   {"estimate", num(r.estimate)},
                   {"lower", num(r.lower)},
                   {"upper", num(r.upper)},
                   {"rhat", num(r.rhat)},
                   {"ess", num(r.ess)},
                   {"se", num(r.se)}});
  }
  return arr;
}

inline nlohmann::json group_counts_json(std::span<const ObservationRecord> data) {
  int count[5] = {0, 0, 0, 0, 0};
  for (const auto& r : data) ++count[group_number(r.group)];
  return {{"C1", count[1]}, {"C2", count[2]}, {"C3", count[3]}, {"C4", count[4]}};
}

inline nlohmann::json centering_json(const Centering& c) {
  nlohmann::json j = {{"enabled", c.enabled}, {"means", nlohmann::json::object()}};
  for (const auto& [k, v] : c.means) j["means"][k] = v;
  return j;
}

// Rows for a PI fit: point, observed-information SE for the parameters and
// bootstrap percentile bounds when available.
inline std::vector<SummaryRow> pi_summary_rows(const PiFit& fit, const SummaryContext& ctx,
                                               const BootstrapResult* boot) {
  const auto names = pi_estimand_names(fit.layout, ctx);
  const auto point = pi_estimands(fit.point, ctx);
  std::vector<SummaryRow> rows;
  for (std::size_t e = 0; e < names.size(); ++e) {
    SummaryRow r;
    r.name = names[e];
    r.estimate = point[e];
    r.lower = boot ? boot->lower[e] : std::numeric_limits<double>::quiet_NaN();
    r.upper = boot ? boot->upper[e] : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(r);
  }
  // names: alpha, lambda, m_tilde, beta_pi..., gamma...; se: alpha, lambda, beta_pi..., gamma...
  if (!fit.se.empty()) {
    rows[0].se = fit.se[0];
    rows[1].se = fit.se[1];
    for (std::size_t i = 2; i < fit.se.size(); ++i) rows[i + 1].se = fit.se[i];
  }
  return rows;
}

inline std::string render_bootstrap_csv(const BootstrapResult& b) {
  std::ostringstream os;
  os << "resample";
  for (const auto& n : b.names) os << ',' << n;
  os << '\n';
  for (std::size_t i = 0; i < b.estimates.size(); ++i) {
    os << i + 1;
    for (double v : b.estimates[i]) os << ',' << format_double(v);
    os << '\n';
  }
  return os.str();
}

inline std::string render_npmle_csv(const NpmleCurve& curve) {
  std::ostringstream os;
  os << "t,survival,lower,upper\n";
  for (const auto& [t, s] : curve.steps()) os << format_double(t) << ',' << format_double(s) << ",,\n";
  return os.str();
}

inline std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline nlohmann::json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

inline nlohmann::json truth_json(const PicParameters& p) {
  return {{"alpha", p.alpha}, {"lambda", p.lambda}, {"beta_pi", p.beta_pi}, {"beta_delta", p.beta_delta},
          {"gamma", p.gamma}};
}

inline nlohmann::json dgp_json(const DgpConfig& c) {
  return {{"n", c.n},
          {"seed", c.seed},
          {"p_baseline_test", c.p_baseline_test},
          {"visit_gap_shape", c.visit_gap_shape},
          {"visit_gap_scale", c.visit_gap_scale},
          {"max_visits", c.max_visits},
          {"horizon", c.horizon},
          {"p_strain16", c.p_strain16},
          {"count_baseline_in_cap", c.count_baseline_in_cap},
          {"truth", truth_json(c.truth)}};
}

inline DgpConfig parse_dgp_config(const nlohmann::json& j) {
  static const std::set<std::string> known{"n", "seed", "p_baseline_test", "visit_gap_shape", "visit_gap_scale",
                                           "max_visits", "horizon", "p_strain16", "count_baseline_in_cap", "truth"};
  if (!j.is_object()) throw ConfigError("simulation config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown simulation config key '" + key + "'");
  }
  DgpConfig c;
  try {
    c.n = j.value("n", c.n);
    c.seed = j.value("seed", c.seed);
    c.p_baseline_test = j.value("p_baseline_test", c.p_baseline_test);
    c.visit_gap_shape = j.value("visit_gap_shape", c.visit_gap_shape);
    c.visit_gap_scale = j.value("visit_gap_scale", c.visit_gap_scale);
    c.max_visits = j.value("max_visits", c.max_visits);
    c.horizon = j.value("horizon", c.horizon);
    c.p_strain16 = j.value("p_strain16", c.p_strain16);
    c.count_baseline_in_cap = j.value("count_baseline_in_cap", c.count_baseline_in_cap);
    if (j.contains("truth")) {
      const auto& t = j.at("truth");
      c.truth.alpha = t.value("alpha", c.truth.alpha);
      c.truth.lambda = t.value("lambda", c.truth.lambda);
      c.truth.beta_pi = t.value("beta_pi", c.truth.beta_pi);
      c.truth.beta_delta = t.value("beta_delta", c.truth.beta_delta);
      c.truth.gamma = t.value("gamma", c.truth.gamma);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("simulation config: ") + e.what());
  }
  return c;
}

}  // namespace picsurv
