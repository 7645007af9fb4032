// Command-line experiment runner.
//
//   cmalab <command> [--config FILE] [--out DIR] [--dump-stages] [--threads K] [--seed S]
//
// Exit status: 0 pass / converged, 2 a checked inequality failed, 1 error.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <exception>
#include <iostream>
#include <optional>

#include "cma/config.hpp"
#include "cma/experiment.hpp"

namespace {

struct Command {
  const char* name;
  const char* help;
  const char* columns;
};

const Command kCommands[] = {
    {"solve", "Solve (omega + dd^c phi)^n = c mu for the configured fixture",
     "solve.csv: iteration,residual\n"
     "stages.csv (continuation): stage,delta,c,iterations,cauchy\n"
     "phi.cmag, mu.cmag; stage_<j>.cmag with --dump-stages"},
    {"capacity", "Capacity lower bounds of nested sublevel sets and the two decay fits",
     "capacity.csv: set_id,cap_lower,mu_mass,C,alpha1_or_tau,residual,kind"},
    {"regularize", "Kernel masses, L1 regularization rate and Kiselman-Legendre sandwich",
     "kernel.csv: delta,eta,raw_mass\nrate.csv: delta,l1_diff\n"
     "kl.csv: delta,b,t0_min,sandwich_lower,sandwich_upper,hessian_min"},
    {"stability", "L1 stability estimate on perturbations of a manufactured solution",
     "stability.csv: amplitude,lhs,l1,gamma,C,rhs,pass\n"
     "stability_ledger.csv: eps,eps_B,s,t,cap_s,cap_st,ma_st,growth_slack,hbar\n"
     "stability_constants.csv: eps,eps_B,C_growth,C_26,C_27"},
    {"certificate", "Hoelder certificate for the solution of the configured fixture",
     "certificate.csv: delta,b,gap,Phi_sup,t0_min,kappa_hat,sandwich_lower,sandwich_upper,diff2,chain,"
     "l1_excess,modulus,hessian_min,hessian_ok,pass\n"
     "certificate_summary.csv: alpha,alpha1,alpha1_fit,gamma,tau,kappa,kappa_formula,modulus_exponent,"
     "C4,C5,C6,C7,K,A,B,trivial,pass\nrate.csv: delta,l1_diff"},
    {"mixture", "Domination of a two-solution mixture, its solve and certificate",
     "certificate.csv, certificate_summary.csv, rate.csv as for certificate; phi.cmag"},
    {"sweep", "Run [sweep] command over the grid sweep.N x sweep.tau",
     "sweep.csv: cell,N,tau,exit_code,<summary keys of the cells>,error\ncell_<k>/: per-cell outputs"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Monge-Ampere laboratory on flat complex tori");
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::string> out_dir;
  bool dump_stages = false;
  int threads = 1;
  std::optional<std::uint64_t> seed;

  for (const auto& c : kCommands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->footer(std::string("Outputs:\n") + c.columns);
    sub->add_option("--config", config_path, "Configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (created if missing)");
    sub->add_flag("--dump-stages", dump_stages, "Write CMAG grids of every solver stage");
    sub->add_option("--threads", threads, "Worker threads for sweep cells")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Seed for randomized fixtures");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every usage error maps onto the error status.
    return app.exit(e) == 0 ? cma::kExitPass : cma::kExitError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    cma::ExperimentConfig cfg = config_path.empty() ? cma::ExperimentConfig{} : cma::load_config(config_path);
    if (seed) cfg.fixture.seed = *seed;
    if (out_dir) cfg.output.dir = *out_dir;
    cma::RunOptions opt;
    opt.out = cfg.output.dir;
    opt.dump_stages = dump_stages || cfg.output.dump_stages;
    opt.threads = threads;
    cma::RunResult res = cma::run(command, cfg, opt);
    fmt::print("{} {} exit={}\n", command, res.summary_line(), res.exit_code);
    return res.exit_code;
  } catch (const std::exception& e) {
    fmt::print(stderr, "cmalab {}: error: {}\n", command, e.what());
    return cma::kExitError;
  }
}
