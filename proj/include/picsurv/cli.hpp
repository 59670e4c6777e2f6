#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "picsurv/io.hpp"
#include "picsurv/study.hpp"

// Command implementations behind the picsurv executable. Each returns the
// process exit code: 0 success, 2 statistical non-convergence (outputs still
// written), and throws picsurv::Error for operational failures (exit 1).
namespace picsurv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

inline nlohmann::json manifest(const std::string& command, nlohmann::json args) {
  return {{"tool", "picsurv"}, {"version", version()}, {"command", command}, {"args", std::move(args)}};
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory '" + dir + "': " + ec.message());
}

inline std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

struct SimulateOptions {
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::string config;  // optional JSON DGP config
  std::string out;
  int threads = 0;
};

// Writes data.csv, truth.csv and manifest.json into opts.out.
inline int simulate(const SimulateOptions& opts, std::ostream& log) {
  DgpConfig cfg;
  if (!opts.config.empty()) cfg = parse_dgp_config(parse_json_text(read_file(opts.config), opts.config));
  if (opts.n) cfg.n = *opts.n;
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.threads = opts.threads;
  cfg.validate();
  const Cohort cohort = simulate_cohort(cfg);
  ensure_dir(opts.out);
  write_file(join(opts.out, "data.csv"), render_dataset_csv(cohort_dataset(cohort)));
  write_file(join(opts.out, "truth.csv"), render_truth_csv(cohort));
  auto m = manifest("simulate", {{"config", dgp_json(cfg)}});
  m["n_redrawn"] = cohort.n_redrawn;
  m["outputs"] = {"data.csv", "truth.csv"};
  write_file(join(opts.out, "manifest.json"), dump_json(m));
  log << "simulated " << cfg.n << " subjects into " << opts.out << "\n";
  return kExitOk;
}

struct FitOptions {
  std::string data;
  std::string config;
  std::string out;
  int threads = 0;
};

// PIC: summary.json + draws.csv; PI: fit.json + bootstrap.csv.
inline int fit(const FitOptions& opts, std::ostream& log) {
  const Dataset ds = parse_dataset_csv(read_file(opts.data));
  if (ds.rows.empty()) throw ConfigError("dataset '" + opts.data + "' has no records");
  const RunConfig rc = parse_run_config(parse_json_text(read_file(opts.config), opts.config));
  for (const auto& c : rc.covariates.mix) ds.column_index(c);
  for (const auto& c : rc.covariates.inc) ds.column_index(c);
  const Centering centering = compute_centering(ds, rc.covariates, rc.center);
  const auto records = build_records(ds, rc.covariates, centering);
  const SummaryContext ctx{resolve_profiles(rc, ds, centering), rc.times};
  ensure_dir(opts.out);

  nlohmann::json args = {{"data", opts.data}, {"config", parse_json_text(read_file(opts.config), opts.config)}};
  nlohmann::json summary = {{"model", model_name(rc.model)},
                            {"time_unit", rc.time_unit},
                            {"version", version()},
                            {"n_records", records.size()},
                            {"group_counts", group_counts_json(records)},
                            {"centering", centering_json(centering)}};

  if (rc.model == Model::PIC) {
    SamplerConfig sc = rc.sampler;
    sc.threads = opts.threads;
    check_prior_dims(rc.prior, layout_for(records, rc.prior, Model::PIC));
    const ChainSet chains = sample_posterior(records, rc.prior, Model::PIC, sc);
    const auto rows = summarize(chains, ctx);
    const double max_rhat = chains.max_rhat();
    const bool ok = max_rhat < 1.1;
    summary["method"] = "pic-mcmc";
    summary["prior"] = rc.prior;
    summary["prior_source"] = rc.prior_source;
    summary["sampler"] = {{"n_chains", sc.n_chains}, {"n_adapt", sc.n_adapt}, {"n_burnin", sc.n_burnin},
                          {"n_keep", sc.n_keep},     {"thin", sc.thin},       {"seed", sc.seed},
                          {"target_accept", sc.target_accept}};
    summary["accept_rates"] = chains.accept_rates;
    summary["parameter_names"] = chains.layout.names(true);
    summary["max_rhat"] = max_rhat;
    summary["converged"] = ok;
    summary["warnings"] = chains.warnings;
    summary["rows"] = rows_json(rows);
    write_file(join(opts.out, "summary.json"), dump_json(summary));
    write_file(join(opts.out, "draws.csv"), render_draws_csv(chains));
    auto m = manifest("fit", args);
    m["outputs"] = {"summary.json", "draws.csv"};
    write_file(join(opts.out, "manifest.json"), dump_json(m));
    for (const auto& w : chains.warnings) log << "warning: " << w << "\n";
    if (!ok) {
      log << "max R-hat " << max_rhat << " >= 1.1: chains have not converged\n";
      return kExitNotConverged;
    }
    return kExitOk;
  }

  const PiFit f = fit_pi_mle(records, rc.pi);
  summary["method"] = "pi-mle";
  summary["converged"] = f.converged;
  summary["loglik"] = std::isfinite(f.loglik) ? nlohmann::json(f.loglik) : nlohmann::json(nullptr);
  summary["grad_norm"] = std::isfinite(f.grad_norm) ? nlohmann::json(f.grad_norm) : nlohmann::json(nullptr);
  summary["restarts_converged"] = f.restarts_converged;
  summary["pi"] = {{"max_iter", rc.pi.max_iter}, {"tol", rc.pi.tol}, {"restarts", rc.pi.restarts},
                   {"seed", rc.pi.seed}};
  int code = kExitOk;
  std::optional<BootstrapResult> boot;
  std::string note;
  if (!f.converged) {
    code = kExitNotConverged;
    note = "PI maximum likelihood fit did not converge";
  } else if (rc.bootstrap > 0) {
    try {
      boot = bootstrap_ci(records, f, rc.bootstrap, rc.bootstrap_seed, ctx, opts.threads, rc.pi);
    } catch (const CIUnavailable& e) {
      code = kExitNotConverged;
      note = e.what();
    }
  }
  summary["bootstrap"] = {{"requested", rc.bootstrap},
                          {"seed", rc.bootstrap_seed},
                          {"failed", boot ? boot->n_failed : 0},
                          {"available", boot.has_value()}};
  if (!note.empty()) summary["note"] = note;
  summary["rows"] = f.theta.empty() ? nlohmann::json::array() : rows_json(pi_summary_rows(f, ctx, boot ? &*boot : nullptr));
  write_file(join(opts.out, "fit.json"), dump_json(summary));
  nlohmann::json outputs = {"fit.json"};
  if (boot) {
    write_file(join(opts.out, "bootstrap.csv"), render_bootstrap_csv(*boot));
    outputs.push_back("bootstrap.csv");
  }
  auto m = manifest("fit", args);
  m["outputs"] = outputs;
  write_file(join(opts.out, "manifest.json"), dump_json(m));
  if (!note.empty()) log << note << "\n";
  return code;
}

// Elicitation input: {"alpha":[lo,hi], "median_time":[lo,hi], "ratio_pi":[lo,hi],
// "ratio_delta":[lo,hi], "odds_ratio_pi":[[lo,hi],...], "odds_ratio_delta":[...],
// "hazard_ratio":[...], "time_unit":"..."}; every pair is a 95% interval.
inline PicPriorSpec elicit_spec(const nlohmann::json& q) {
  auto pair = [](const nlohmann::json& v, const std::string& what) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError("'" + what + "' must be a [low, high] pair");
    }
    try {
      return lognormal_from_quantiles(v[0].get<double>(), v[1].get<double>());
    } catch (const QuantileOrder& e) {
      throw QuantileOrder(what + ": " + e.what());
    }
  };
  auto required = [&](const std::string& key) {
    if (!q.contains(key)) throw ConfigError("missing elicited quantity '" + key + "'");
    return pair(q.at(key), key);
  };
  auto list = [&](const std::string& key) {
    std::vector<NormalSpec> out;
    if (!q.contains(key)) return out;
    std::size_t i = 0;
    for (const auto& v : q.at(key)) {
      const auto ln = pair(v, key + "[" + std::to_string(i++) + "]");
      out.push_back({ln.mu, ln.sigma});
    }
    return out;
  };
  PicPriorSpec s;
  s.alpha = required("alpha");
  s.median_time = required("median_time");
  const auto [b_pi, b_delta] = ratio_priors_to_intercepts(required("ratio_pi"), required("ratio_delta"));
  s.beta_pi = {b_pi};
  s.beta_delta = {b_delta};
  for (const auto& n : list("odds_ratio_pi")) s.beta_pi.push_back(n);
  for (const auto& n : list("odds_ratio_delta")) s.beta_delta.push_back(n);
  s.gamma = list("hazard_ratio");
  s.time_unit = q.value("time_unit", std::string("years"));
  return s;
}

inline int elicit(const std::string& in, const std::string& out, std::ostream& log) {
  const auto q = parse_json_text(read_file(in), in);
  const PicPriorSpec s = elicit_spec(q);
  nlohmann::json j = s;
  j["manifest"] = manifest("elicit", {{"quantiles", q}});
  write_file(out, dump_json(j));
  log << "wrote prior spec to " << out << "\n";
  return kExitOk;
}

struct StudyOptions {
  int reps = 50;
  std::size_t n = 400;
  std::string method = "pic";
  std::string preset = "vague";
  std::uint64_t seed = 1;
  std::string out;
  int bootstrap = 500;
  int threads = 0;
  int chains = 4;
  int adapt = 1000;
  int burnin = 1000;
  int keep = 2000;
};

inline int study(const StudyOptions& opts, std::ostream& log) {
  StudyConfig cfg;
  cfg.reps = opts.reps;
  cfg.n = opts.n;
  cfg.seed = opts.seed;
  cfg.threads = opts.threads;
  cfg.validate();
  Estimator est;
  nlohmann::json args = {{"reps", opts.reps}, {"n", opts.n}, {"method", opts.method}, {"seed", opts.seed}};
  if (opts.method == "pic") {
    cfg.model = Model::PIC;
    SamplerConfig sc;
    sc.n_chains = opts.chains;
    sc.n_adapt = opts.adapt;
    sc.n_burnin = opts.burnin;
    sc.n_keep = opts.keep;
    sc.validate();
    const Preset p = parse_preset(opts.preset);
    est = make_pic_estimator(preset(p), sc);
    args["preset"] = preset_name(p);
    args["sampler"] = {{"n_chains", sc.n_chains}, {"n_adapt", sc.n_adapt}, {"n_burnin", sc.n_burnin},
                       {"n_keep", sc.n_keep}};
  } else if (opts.method == "pi") {
    cfg.model = Model::PI;
    if (opts.bootstrap < 100) throw ConfigError("bootstrap needs at least 100 resamples");
    est = make_pi_estimator(PiFitConfig{}, opts.bootstrap);
    args["bootstrap"] = opts.bootstrap;
  } else {
    throw ConfigError("method must be \"pic\" or \"pi\"");
  }
  ensure_dir(opts.out);
  const StudyResult res = run_study(cfg, est);
  write_file(join(opts.out, "raw.csv"), render_raw_csv(res.raw));
  write_file(join(opts.out, "metrics.csv"), metrics_table_render(res.metrics, TableFormat::Csv));
  write_file(join(opts.out, "metrics.md"), metrics_table_render(res.metrics, TableFormat::Markdown));
  auto m = manifest("study", args);
  m["dgp"] = dgp_json(cfg.dgp);
  m["data_seeds"] = res.data_seeds;
  m["fit_seeds"] = res.fit_seeds;
  m["n_failed_fit"] = res.metrics.n_failed_fit;
  m["n_failed_ci"] = res.metrics.n_failed_ci;
  m["n_rhat_flagged"] = res.metrics.n_rhat_flagged;
  m["n_redrawn"] = res.n_redrawn;
  m["outputs"] = {"raw.csv", "metrics.csv", "metrics.md"};
  write_file(join(opts.out, "manifest.json"), dump_json(m));
  log << "study: " << opts.reps << " replications, " << res.metrics.n_failed_fit << " failed fits, "
      << res.metrics.n_failed_ci << " failed intervals\n";
  return kExitOk;
}

// Writes the curve CSV and a sibling <out>.manifest.json.
inline int npmle(const std::string& data, const std::string& out, std::ostream& log) {
  const Dataset ds = parse_dataset_csv(read_file(data));
  std::vector<CensoredInterval> ivs;
  for (const auto& row : ds.rows) ivs.push_back(to_censored_interval(row.l, row.r));
  const NpmleCurve curve = turnbull_npmle(ivs);
  write_file(out, render_npmle_csv(curve));
  auto m = manifest("npmle", {{"data", data}});
  m["iterations"] = curve.iterations;
  m["n_records"] = ds.rows.size();
  write_file(out + ".manifest.json", dump_json(m));
  log << "NPMLE over " << curve.intervals.size() << " innermost intervals, " << curve.iterations
      << " EM iterations\n";
  return kExitOk;
}

}  // namespace picsurv::cli
