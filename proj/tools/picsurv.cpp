#include <iostream>

#include <CLI11.hpp>

#include "picsurv/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = picsurv::cli;
  CLI::App app{"Prevalence-incidence-cure survival models for interval-censored screening data"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", std::string("picsurv ") + picsurv::version());

  int threads = 0;
  auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", threads, "Worker threads (0: PICSURV_THREADS or 1); results do not depend on it")
        ->check(CLI::NonNegativeNumber);
  };

  cli::SimulateOptions sim;
  std::size_t sim_n = 0;
  std::uint64_t sim_seed = 0;
  auto* s = app.add_subcommand("simulate", "Simulate a cervical-screening cohort");
  auto* n_opt = s->add_option("--n", sim_n, "Number of subjects");
  auto* seed_opt = s->add_option("--seed", sim_seed, "RNG seed");
  s->add_option("--config", sim.config, "JSON simulation config")->check(CLI::ExistingFile);
  s->add_option("--out", sim.out, "Output directory")->required();
  add_threads(s);

  cli::FitOptions fit;
  auto* f = app.add_subcommand("fit", "Fit the PIC model by MCMC or the PI model by maximum likelihood");
  f->add_option("--data", fit.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  f->add_option("--config", fit.config, "Run config JSON")->required()->check(CLI::ExistingFile);
  f->add_option("--out", fit.out, "Output directory")->required();
  add_threads(f);

  std::string q_in, q_out;
  auto* e = app.add_subcommand("elicit", "Turn elicited 95% intervals into a prior spec");
  e->add_option("--quantiles-json", q_in, "Elicited quantiles JSON")->required()->check(CLI::ExistingFile);
  e->add_option("--out", q_out, "Prior spec JSON to write")->required();

  cli::StudyOptions st;
  auto* y = app.add_subcommand("study", "Run a simulation study");
  y->add_option("--reps", st.reps, "Replications")->capture_default_str();
  y->add_option("--n", st.n, "Subjects per replication")->capture_default_str();
  y->add_option("--method", st.method, "pic or pi")->capture_default_str();
  y->add_option("--preset", st.preset, "Prior preset for pic: informative, vague, misspecified")
      ->capture_default_str();
  y->add_option("--seed", st.seed, "Study seed")->capture_default_str();
  y->add_option("--out", st.out, "Output directory")->required();
  y->add_option("--bootstrap", st.bootstrap, "Bootstrap resamples for pi")->capture_default_str();
  y->add_option("--chains", st.chains, "MCMC chains for pic")->capture_default_str();
  y->add_option("--adapt", st.adapt, "Adaptation iterations for pic")->capture_default_str();
  y->add_option("--burnin", st.burnin, "Burn-in iterations for pic")->capture_default_str();
  y->add_option("--keep", st.keep, "Retained iterations per chain for pic")->capture_default_str();
  add_threads(y);

  std::string np_data, np_out;
  auto* p = app.add_subcommand("npmle", "Turnbull NPMLE of the marginal survival curve");
  p->add_option("--data", np_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  p->add_option("--out", np_out, "Curve CSV to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    // --help and --version exit 0; usage errors share the generic error code
    return app.exit(err) == 0 ? cli::kExitOk : cli::kExitError;
  }

  try {
    if (s->parsed()) {
      if (*n_opt) sim.n = sim_n;
      if (*seed_opt) sim.seed = sim_seed;
      sim.threads = threads;
      return cli::simulate(sim, std::cerr);
    }
    if (f->parsed()) {
      fit.threads = threads;
      return cli::fit(fit, std::cerr);
    }
    if (e->parsed()) return cli::elicit(q_in, q_out, std::cerr);
    if (y->parsed()) {
      st.threads = threads;
      return cli::study(st, std::cerr);
    }
    if (p->parsed()) return cli::npmle(np_data, np_out, std::cerr);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return cli::kExitError;
  }
  std::cout << app.help();
  return cli::kExitOk;
}
