#include "cma/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "cma/capacity.hpp"
#include "cma/certify.hpp"
#include "cma/error.hpp"
#include "cma/fixtures.hpp"
#include "cma/grid_io.hpp"
#include "cma/regularize.hpp"
#include "cma/solver.hpp"

namespace cma {
namespace {

namespace fs = std::filesystem;

std::string num(double x) { return fmt::format("{:.17g}", x); }
std::string num(int x) { return fmt::format("{}", x); }
std::string num(std::size_t x) { return fmt::format("{}", x); }
std::string flag(bool b) { return b ? "true" : "false"; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error(fmt::format("cannot write {}", path.string()));
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << csv_field(cells[i]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

HermitianMetric make_metric(const ExperimentConfig& cfg) {
  Torus t(cfg.torus.n, cfg.torus.N);
  return cfg.metric.kind == "flat" ? flat_metric(t) : conformal_metric(t, cfg.metric.amplitude);
}

// Equation datum mu together with what produced it.
struct Problem {
  HermitianMetric metric;
  MeasureField mu;
  std::optional<GridFunction> exact;         // manufactured solutions
  std::optional<ContinuationSchedule> schedule;  // hoelder fixture
};

std::vector<double> default_continuation(const Torus& t) {
  std::vector<double> out;
  for (double d = 0.125; d >= 2.0 * t.spacing() * (1.0 - 1e-12); d *= 0.5) out.push_back(d);
  return out;
}

Problem make_problem(const ExperimentConfig& cfg) {
  HermitianMetric metric = make_metric(cfg);
  const Torus& t = metric.torus;
  const auto& name = cfg.fixture.name;
  if (name == "identity") return {metric, MeasureField(GridFunction(t, 1.0), metric), GridFunction(t, 0.0), {}};
  if (name == "manufactured" || name == "random") {
    GridFunction f(t);
    if (name == "manufactured") {
      f = fixtures::product(t, cfg.fixture.amplitude);
    } else {
      std::mt19937_64 rng(cfg.fixture.seed);
      f = fixtures::random_psh(metric, rng);
    }
    if (!is_psh(f, metric)) throw InvalidInput("fixture is not omega-psh; lower fixture.amplitude");
    MeasureField mu = ma_measure(f, metric);
    return {metric, std::move(mu), f - f.max(), {}};
  }
  if (name == "lp") return {metric, lp_density_fixture(cfg.fixture.p, cfg.fixture.s, metric), {}, {}};
  // hoelder
  if (!metric.is_flat()) throw InvalidInput("the hoelder fixture requires the flat metric");
  GridFunction u = fixtures::hoelder_subsolution(t, cfg.fixture.amplitude);
  MeasureField mu = fixtures::modulated_measure(u, metric);
  ContinuationSchedule sch = decompose_subsolution(mu, u, metric);
  sch.deltas = cfg.solver.continuation.empty() ? default_continuation(t) : cfg.solver.continuation;
  return {metric, std::move(mu), {}, std::move(sch)};
}

SolveOptions solve_options(const ExperimentConfig& cfg, bool keep_stages) {
  SolveOptions o;
  o.tol = cfg.solver.tol;
  o.max_iter = cfg.solver.max_iter;
  o.keep_stages = keep_stages;
  return o;
}

// Measure actually solved by the last continuation stage.
MeasureField stage_measure(const ContinuationSchedule& sch, double delta, const HermitianMetric& metric) {
  GridFunction uj = mollify(sch.u, delta, metric);
  if (!is_psh(uj, metric)) uj = psh_repair(uj, metric, 1);
  GridFunction w = ma_measure(uj, metric).density();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= sch.C0 * sch.h[i];
  return MeasureField(std::move(w), metric);
}

struct Solved {
  SolveReport report;
  MeasureField mu;  // datum of the returned solution
};

Solved solve_problem(const ExperimentConfig& cfg, const Problem& pb, bool keep_stages) {
  if (pb.schedule) {
    SolveReport rep = continuation_solve(*pb.schedule, pb.metric, solve_options(cfg, keep_stages));
    return {std::move(rep), stage_measure(*pb.schedule, pb.schedule->deltas.back(), pb.metric)};
  }
  return {solve_ma(pb.mu, pb.metric, solve_options(cfg, keep_stages)), pb.mu};
}

void write_certificate(const HoelderCertificate& c, const fs::path& dir, RunResult& res) {
  Csv rows(dir / "certificate.csv",
           {"delta", "b", "gap", "Phi_sup", "t0_min", "kappa_hat", "sandwich_lower", "sandwich_upper", "diff2",
            "chain", "l1_excess", "modulus", "hessian_min", "hessian_ok", "pass"});
  for (const auto& r : c.rows)
    rows.row({num(r.delta), num(r.b), num(r.gap), num(r.Phi_sup), num(r.t0_min), num(r.kappa_hat),
              num(r.sandwich_lower), num(r.sandwich_upper), num(r.diff2), num(r.chain), num(r.l1_excess),
              num(r.modulus), num(r.hessian_min), flag(r.hessian_ok), flag(r.pass)});
  Csv rate(dir / "rate.csv", {"delta", "l1_diff"});
  for (std::size_t i = 0; i < c.rate_deltas.size(); ++i) rate.row({num(c.rate_deltas[i]), num(c.rate_l1[i])});
  std::vector<std::pair<std::string, std::string>> s = {
      {"alpha", num(c.alpha)},       {"alpha1", num(c.alpha1)},     {"alpha1_fit", num(c.alpha1_fit)},
      {"gamma", num(c.gamma)},       {"tau", num(c.tau)},           {"kappa", num(c.kappa)},
      {"kappa_formula", num(c.kappa_formula)}, {"modulus_exponent", num(c.modulus_exponent)},
      {"C4", num(c.C4)},             {"C5", num(c.C5)},             {"C6", num(c.C6)},
      {"C7", num(c.C7)},             {"K", num(c.K)},               {"A", num(c.A)},
      {"B", num(c.B)},               {"trivial", flag(c.trivial)},  {"pass", flag(c.pass)}};
  std::vector<std::string> head, vals;
  for (auto& [k, v] : s) {
    head.push_back(k);
    vals.push_back(v);
    res.summary.emplace_back(k, v);
  }
  Csv summary(dir / "certificate_summary.csv", head);
  summary.row(vals);
}

// ---------------------------------------------------------------------------

RunResult run_solve(const ExperimentConfig& cfg, const RunOptions& opt) {
  Problem pb = make_problem(cfg);
  const bool dump = opt.dump_stages || cfg.output.dump_stages;
  Solved sv = solve_problem(cfg, pb, dump);
  const SolveReport& rep = sv.report;
  Csv hist(opt.out / "solve.csv", {"iteration", "residual"});
  for (std::size_t i = 0; i < rep.residual_history.size(); ++i) hist.row({num(i), num(rep.residual_history[i])});
  if (pb.schedule) {
    Csv st(opt.out / "stages.csv", {"stage", "delta", "c", "iterations", "cauchy"});
    for (std::size_t j = 0; j < rep.c_trace.size(); ++j)
      st.row({num(j), num(pb.schedule->deltas[j]), num(rep.c_trace[j]), num(rep.stage_iterations[j]),
              j == 0 ? std::string() : num(rep.cauchy[j - 1])});
  }
  write_cmag(opt.out / "phi.cmag", rep.phi);
  write_cmag(opt.out / "mu.cmag", sv.mu.density());
  if (dump)
    for (std::size_t j = 0; j < rep.stage_phi.size(); ++j)
      write_cmag(opt.out / fmt::format("stage_{}.cmag", j), rep.stage_phi[j]);

  RunResult res;
  res.summary = {{"converged", flag(rep.converged)},
                 {"c", num(rep.c)},
                 {"iterations", num(rep.iterations)},
                 {"residual", num(rep.residual_history.back())},
                 {"mass", num(sv.mu.mass())}};
  if (pb.exact) res.summary.emplace_back("error", num((rep.phi - *pb.exact).sup_norm()));
  if (rep.c_trace.size() > 1) {
    auto [lo, hi] = std::minmax_element(rep.c_trace.begin(), rep.c_trace.end());
    res.summary.emplace_back("c_spread", num(*hi / *lo));
  }
  res.exit_code = rep.converged ? kExitPass : kExitFail;
  return res;
}

RunResult run_capacity(const ExperimentConfig& cfg, const RunOptions& opt) {
  Problem pb = make_problem(cfg);
  const HermitianMetric& m = pb.metric;
  GridFunction ref = fixtures::product(m.torus, 0.05);
  auto sets = fixtures::nested_sublevels(ref, cfg.capacity.sets);
  std::vector<Mask> masks;
  for (auto& s : sets) masks.push_back(s.mask);
  auto caps = estimate_capacities(masks, m, cfg.capacity.budget);
  DecayFit vc = fit_volume_capacity(pb.mu, masks, caps, m);
  DecayFit ht = fit_htau(pb.mu, masks, caps, cfg.capacity.tau, m);

  GridFunction zero(m.torus, 0.0);
  bool baseline = true, monotone = true, feasible = true;
  for (std::size_t k = 0; k < masks.size(); ++k) {
    baseline = baseline && caps[k].lower >= capacity_objective(masks[k], zero, m);
    feasible = feasible && is_capacity_feasible(caps[k].candidate, m);
    if (k > 0) monotone = monotone && caps[k].lower >= caps[k - 1].lower;
  }
  Csv out(opt.out / "capacity.csv", {"set_id", "cap_lower", "mu_mass", "C", "alpha1_or_tau", "residual", "kind"});
  for (const DecayFit* f : {&vc, &ht})
    for (std::size_t k = 0; k < masks.size(); ++k)
      out.row({num(k), num(f->cap_lower[k]), num(f->mu_mass[k]), num(f->C), num(f->exponent), num(f->residual),
               f->kind == DecayFit::Kind::VolumeCapacity ? "volume_capacity" : "htau"});
  RunResult res;
  const bool pass = vc.finite() && ht.finite() && vc.residual <= 0.0 && ht.residual <= 0.0 && baseline &&
                    monotone && feasible;
  res.summary = {{"C", num(vc.C)},           {"alpha1", num(vc.exponent)},      {"C_tau", num(ht.C)},
                 {"tau", num(ht.exponent)},  {"baseline", flag(baseline)},       {"monotone", flag(monotone)},
                 {"feasible", flag(feasible)}, {"pass", flag(pass)}};
  res.exit_code = pass ? kExitPass : kExitFail;
  return res;
}

RunResult run_regularize(const ExperimentConfig& cfg, const RunOptions& opt) {
  Problem pb = make_problem(cfg);
  const HermitianMetric& m = pb.metric;
  const Torus& t = m.torus;
  GridFunction phi = pb.exact ? *pb.exact : pb.schedule ? pb.schedule->u : solve_problem(cfg, pb, false).report.phi;
  MeasureField vol(GridFunction(t, 1.0 / volume(m)), m);
  auto radii = rate_radii(t);
  RateFit rate = l1_rate(phi, vol, radii, m);
  {
    Csv k(opt.out / "kernel.csv", {"delta", "eta", "raw_mass"});
    for (double d : radii) {
      MollifierKernel ker = make_kernel(t, d);
      k.row({num(d), num(ker.eta), num(ker.raw_mass)});
    }
    Csv r(opt.out / "rate.csv", {"delta", "l1_diff"});
    for (std::size_t i = 0; i < rate.deltas.size(); ++i) r.row({num(rate.deltas[i]), num(rate.l1_diff[i])});
  }
  const double gamma = gamma_exponent(t.n(), cfg.certificate.tau);
  bool sandwich = true;
  Csv kl(opt.out / "kl.csv", {"delta", "b", "t0_min", "sandwich_lower", "sandwich_upper", "hessian_min"});
  for (double d : cfg.certificate.deltas) {
    const double b = std::pow(d, gamma);
    KLTransform T = kiselman_legendre(phi, d, b, m.K, m);
    double lower = (T.value - phi).min();
    double upper = (T.rho_delta + (m.K * d + m.K * d * d) - T.value).min();
    sandwich = sandwich && lower >= -1e-10 && upper >= -1e-10;
    kl.row({num(d), num(b), num(T.t_opt.min()), num(lower), num(upper), num(hessian_lower_bound(T, m, m.A))});
  }
  RunResult res;
  res.summary = {{"alpha1", num(rate.alpha1)}, {"C", num(rate.C)}, {"K", num(m.K)}, {"sandwich", flag(sandwich)}};
  res.exit_code = sandwich ? kExitPass : kExitFail;
  return res;
}

RunResult run_stability(const ExperimentConfig& cfg, const RunOptions& opt) {
  Problem pb = make_problem(cfg);
  const HermitianMetric& m = pb.metric;
  if (!pb.exact) throw InvalidInput("stability needs a manufactured fixture (identity, manufactured or random)");
  const GridFunction& phi = *pb.exact;
  MeasureField mu = ma_measure(phi, m).scaled(cfg.stability.corrupt, m);
  GridFunction bump = GridFunction::sample(m.torus, [](const Point& p) { return 1.0 - std::cos(2.0 * std::numbers::pi * p[0]); });

  std::vector<GridFunction> psis;
  double C = 0.0;
  StabilityOptions fit;
  fit.ledger = false;
  for (double a : cfg.stability.amplitudes) {
    GridFunction psi = phi + a * bump;
    psi -= std::max(psi.max(), 0.0);
    C = std::max(C, stability_check(psi, phi, mu, cfg.stability.tau, m, fit).C);
    psis.push_back(std::move(psi));
  }
  Csv out(opt.out / "stability.csv", {"amplitude", "lhs", "l1", "gamma", "C", "rhs", "pass"});
  bool pass = true;
  std::optional<StabilityCheck> first;
  for (std::size_t k = 0; k < psis.size(); ++k) {
    StabilityOptions o;
    o.C = C;
    o.ledger = cfg.stability.ledger && k == 0;
    o.eps_list = cfg.stability.eps;
    o.points = cfg.stability.points;
    o.capacity_budget = cfg.stability.capacity_budget;
    StabilityCheck sc = stability_check(psis[k], phi, mu, cfg.stability.tau, m, o);
    out.row({num(cfg.stability.amplitudes[k]), num(sc.lhs), num(sc.l1), num(sc.gamma), num(sc.C), num(sc.rhs),
             flag(sc.pass)});
    pass = pass && sc.pass;
    if (k == 0) first = std::move(sc);
  }
  RunResult res;
  res.summary = {{"gamma", num(first->gamma)}, {"C", num(C)}};
  if (!first->ledger.empty()) {
    Csv led(opt.out / "stability_ledger.csv",
            {"eps", "eps_B", "s", "t", "cap_s", "cap_st", "ma_st", "growth_slack", "hbar"});
    Csv consts(opt.out / "stability_constants.csv", {"eps", "eps_B", "C_growth", "C_26", "C_27"});
    bool growth = true;
    for (const auto& l : first->ledger) {
      consts.row({num(l.eps), num(l.eps_B), num(l.C_growth), num(l.C_26), num(l.C_27)});
      for (const auto& r : l.rows) {
        led.row({num(r.eps), num(r.eps_B), num(r.s), num(r.t), num(r.cap_s), num(r.cap_st), num(r.ma_st),
                 num(r.growth_slack), num(r.hbar)});
        growth = growth && r.growth_slack >= -1e-12 && std::isfinite(l.C_growth);
      }
    }
    res.summary.emplace_back("C_tau", num(first->C_tau));
    res.summary.emplace_back("ledger", flag(growth));
    pass = pass && growth;
  }
  res.summary.emplace_back("pass", flag(pass));
  res.exit_code = pass ? kExitPass : kExitFail;
  return res;
}

RunResult run_certificate(const ExperimentConfig& cfg, const RunOptions& opt) {
  Problem pb = make_problem(cfg);
  Solved sv = solve_problem(cfg, pb, false);
  if (!sv.report.converged) throw DivergenceError("solver did not converge; certificate needs a solution");
  HoelderCertificate c = hoelder_certificate(sv.report.phi, sv.mu, cfg.certificate.tau, pb.metric, cfg.certificate.deltas);
  write_cmag(opt.out / "phi.cmag", sv.report.phi);
  RunResult res;
  res.summary.emplace_back("c", num(sv.report.c));
  write_certificate(c, opt.out, res);
  res.exit_code = c.pass ? kExitPass : kExitFail;
  return res;
}

RunResult run_mixture(const ExperimentConfig& cfg, const RunOptions& opt) {
  HermitianMetric m = make_metric(cfg);
  const Torus& t = m.torus;
  GridFunction phi1 = fixtures::product(t, cfg.fixture.amplitude);
  const double a2 = cfg.mixture.amplitude;
  GridFunction phi2 = GridFunction::sample(t, [a2, n = t.n()](const Point& p) {
    double v = std::cos(2.0 * std::numbers::pi * p[1]);
    if (n == 2) v += std::cos(2.0 * std::numbers::pi * p[3]);
    return a2 * v;
  });
  MixtureResult mix = mixture_experiment(phi1, phi2, cfg.mixture.c1, cfg.mixture.c2, m, cfg.mixture.tol,
                                         cfg.certificate.tau, cfg.certificate.deltas, solve_options(cfg, false));
  write_cmag(opt.out / "phi.cmag", mix.solve.phi);
  RunResult res;
  res.summary = {{"domination_slack", num(mix.domination_slack)},
                 {"converged", flag(mix.solve.converged)},
                 {"c", num(mix.solve.c)}};
  write_certificate(mix.certificate, opt.out, res);
  res.exit_code = mix.solve.converged && mix.certificate.pass ? kExitPass : kExitFail;
  return res;
}

RunResult run_sweep(const ExperimentConfig& cfg, const RunOptions& opt) {
  if (cfg.sweep.command == "sweep") throw InvalidInput("sweep cells cannot run sweep");
  if (std::find(commands().begin(), commands().end(), cfg.sweep.command) == commands().end())
    throw InvalidInput(fmt::format("unknown sweep command '{}'", cfg.sweep.command));
  if (cfg.sweep.N.empty() && cfg.sweep.tau.empty()) throw InvalidInput("sweep grid is empty: set sweep.N and/or sweep.tau");
  std::vector<int> Ns = cfg.sweep.N.empty() ? std::vector<int>{cfg.torus.N} : cfg.sweep.N;
  std::vector<double> taus = cfg.sweep.tau.empty() ? std::vector<double>{cfg.certificate.tau} : cfg.sweep.tau;

  struct Cell {
    ExperimentConfig cfg;
    fs::path dir;
    RunResult result;
    std::string error;
  };
  std::vector<Cell> cells;
  for (int N : Ns)
    for (double tau : taus) {
      Cell c{cfg, opt.out / fmt::format("cell_{}", cells.size()), {}, {}};
      c.cfg.torus.N = N;
      c.cfg.certificate.tau = c.cfg.stability.tau = c.cfg.capacity.tau = tau;
      cells.push_back(std::move(c));
    }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      Cell& c = cells[i];
      try {
        validate(c.cfg);
        fs::create_directories(c.dir);
        RunOptions o = opt;
        o.out = c.dir;
        c.result = run(c.cfg.sweep.command, c.cfg, o);
      } catch (const std::exception& e) {
        c.result.exit_code = kExitError;
        c.error = e.what();
      }
    }
  };
  const int threads = std::clamp(opt.threads, 1, static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<std::string> keys;
  for (const auto& c : cells)
    for (const auto& [k, v] : c.result.summary)
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  std::vector<std::string> header = {"cell", "N", "tau", "exit_code"};
  header.insert(header.end(), keys.begin(), keys.end());
  header.push_back("error");
  Csv out(opt.out / "sweep.csv", header);
  int worst = kExitPass;
  int failed = 0, errors = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    std::map<std::string, std::string> kv(c.result.summary.begin(), c.result.summary.end());
    std::vector<std::string> row = {num(i), num(c.cfg.torus.N), num(c.cfg.certificate.tau), num(c.result.exit_code)};
    for (const auto& k : keys) row.push_back(kv.count(k) ? kv[k] : std::string());
    row.push_back(c.error);
    out.row(row);
    if (c.result.exit_code == kExitError) {
      ++errors;
      worst = kExitError;
    } else if (c.result.exit_code == kExitFail) {
      ++failed;
      if (worst == kExitPass) worst = kExitFail;
    }
  }
  RunResult res;
  res.summary = {{"cells", num(cells.size())}, {"failed", num(failed)}, {"errors", num(errors)}};
  res.exit_code = worst;
  return res;
}

}  // namespace

std::string RunResult::summary_line() const {
  std::string s;
  for (const auto& [k, v] : summary) s += (s.empty() ? "" : " ") + k + "=" + v;
  return s;
}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"solve", "capacity", "regularize", "stability",
                                             "certificate", "mixture", "sweep"};
  return c;
}

RunResult run(const std::string& command, const ExperimentConfig& config, const RunOptions& options) {
  validate(config);
  fs::create_directories(options.out);
  if (command == "solve") return run_solve(config, options);
  if (command == "capacity") return run_capacity(config, options);
  if (command == "regularize") return run_regularize(config, options);
  if (command == "stability") return run_stability(config, options);
  if (command == "certificate") return run_certificate(config, options);
  if (command == "mixture") return run_mixture(config, options);
  if (command == "sweep") return run_sweep(config, options);
  throw InvalidInput(fmt::format("unknown command '{}'", command));
}

}  // namespace cma
