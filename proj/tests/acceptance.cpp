// Acceptance run: one [PASS]/[FAIL] line per criterion, nonzero exit when any
// criterion fails.  Tolerances are fixed here, not tuned per run.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cma/capacity.hpp"
#include "cma/certify.hpp"
#include "cma/experiment.hpp"
#include "cma/fixtures.hpp"
#include "cma/regularize.hpp"
#include "cma/solver.hpp"
#include "oracles.hpp"

using namespace cma;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

auto now() { return std::chrono::steady_clock::now(); }

// ---------------------------------------------------------------------------

Outcome manufactured_recovery() {
  bool ok = true;
  std::string d;
  {
    Torus t(1, 64);
    auto m = flat_metric(t);
    auto star = fixtures::cosine(t, 0.05);
    auto mu = ma_measure(star, m);
    auto t0 = now();
    auto rep = solve_ma(mu, m);
    double secs = seconds_since(t0);
    double err = (rep.phi - (star - star.max())).sup_norm();
    ok = ok && rep.converged && err <= 1e-8 && std::abs(rep.c - 1.0) <= 1e-10 && secs < 1.0;
    d += fmt::format("n=1 N=64 err={:.2e} |c-1|={:.2e} t={:.3f}s", err, std::abs(rep.c - 1.0), secs);
  }
  {
    Torus t(2, 16);
    auto m = flat_metric(t);
    auto star = fixtures::product(t, 0.05);
    auto mu = ma_measure(star, m);
    auto t0 = now();
    auto rep = solve_ma(mu, m);
    double secs = seconds_since(t0);
    double err = (rep.phi - (star - star.max())).sup_norm();
    ok = ok && rep.converged && err <= 1e-6 && secs < 30.0;
    d += fmt::format("; n=2 N=16 err={:.2e} newton={} t={:.2f}s", err, rep.iterations, secs);
  }
  return {ok, d};
}

Outcome mass_conservation() {
  Torus t(1, 256);
  auto m = flat_metric(t);
  auto u = fixtures::hoelder_subsolution(t, 0.1);
  auto mu = fixtures::modulated_measure(u, m);
  auto sch = decompose_subsolution(mu, u, m);
  for (int j = 3; j <= 7; ++j) sch.deltas.push_back(std::ldexp(1.0, -j));
  SolveOptions o;
  o.keep_stages = true;
  auto rep = continuation_solve(sch, m, o);
  double worst = 0.0;
  for (std::size_t j = 0; j < sch.deltas.size(); ++j) {
    // stage measure rebuilt from the schedule
    auto uj = mollify(sch.u, sch.deltas[j], m);
    if (!is_psh(uj, m)) uj = psh_repair(uj, m, 1);
    auto w = ma_measure(uj, m).density();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= sch.C0 * sch.h[i];
    MeasureField muj(w, m);
    worst = std::max(worst, std::abs(rep.c_trace[j] - volume(m) / muj.mass()));
  }
  auto [lo, hi] = std::minmax_element(rep.c_trace.begin(), rep.c_trace.end());
  double spread = *hi / *lo;
  bool cauchy_down = true;
  for (std::size_t j = 1; j < rep.cauchy.size(); ++j) cauchy_down = cauchy_down && rep.cauchy[j] < rep.cauchy[j - 1];
  return {rep.converged && worst <= 1e-9 && spread < 10.0,
          fmt::format("stages={} max|c_j - vol/mass|={:.2e} spread={:.4f} cauchy_decreasing={}", rep.c_trace.size(),
                      worst, spread, cauchy_down)};
}

// Discrete mass of the lattice kernel at radius delta, summed directly.
double lattice_kernel_mass(int n, int N, double delta) {
  const double h = 1.0 / N;
  const int R = static_cast<int>(std::ceil(delta / h));
  const double eta = kernel_eta(n);
  std::vector<double> w1(2 * R + 1);
  double s = 0.0;
  if (n == 1) {
    for (int a = -R; a <= R; ++a)
      for (int b = -R; b <= R; ++b) s += kernel_profile((a * a + b * b) * h * h / (delta * delta));
  } else {
    // radial profile: count lattice points per squared radius
    std::vector<double> count(4 * R * R + 1, 0.0);
    std::vector<double> c2(2 * R * R + 1, 0.0);
    for (int a = -R; a <= R; ++a)
      for (int b = -R; b <= R; ++b)
        if (a * a + b * b <= R * R) c2[a * a + b * b] += 1.0;
    for (std::size_t p = 0; p < c2.size(); ++p)
      for (std::size_t q = 0; q < c2.size() && p + q < count.size(); ++q) count[p + q] += c2[p] * c2[q];
    for (std::size_t r2 = 0; r2 < count.size(); ++r2)
      if (count[r2] > 0) s += count[r2] * kernel_profile(r2 * h * h / (delta * delta));
  }
  return eta * s * std::pow(h / delta, 2 * n);
}

Outcome kernel_normalization() {
  bool ok = true;
  std::string d;
  for (int n : {1, 2}) {
    double cont = kernel_eta(n) * oracle::radial_mass(n);
    ok = ok && std::abs(cont - 1.0) <= 1e-6;
    d += fmt::format("n={} continuum={:.12f} ", n, cont);
  }
  // The library kernel and the direct sum agree where both fit in memory.
  for (int n : {1, 2}) {
    int N = n == 1 ? 64 : 32;
    double lib = make_kernel(Torus(n, N), 0.125).raw_mass;
    ok = ok && std::abs(lib - lattice_kernel_mass(n, N, 0.125)) <= 1e-13;
  }
  for (int n : {1, 2}) {
    std::vector<double> err;
    for (int N : {64, 128, 256}) {
      double mass = n == 1 ? make_kernel(Torus(1, N), 0.125).raw_mass : lattice_kernel_mass(2, N, 0.125);
      err.push_back(std::abs(mass - 1.0));
    }
    // at least first order, or already at round-off
    for (std::size_t k = 1; k < err.size(); ++k) ok = ok && (err[k] <= 0.5 * err[k - 1] || err[k] <= 1e-13);
    d += fmt::format("n={} |mass-1| at N=64,128,256: {:.2e} {:.2e} {:.2e} ", n, err[0], err[1], err[2]);
  }
  return {ok, d};
}

Outcome monotonicity() {
  std::mt19937_64 rng(20260101);
  double worst = -1e300, worst_k0 = -1e300;
  int fixtures_run = 0;
  for (int n : {1, 2}) {
    Torus t(n, n == 1 ? 64 : 16);
    auto m = flat_metric(t);
    std::vector<double> radii = {2.0 / t.points_per_axis()};
    for (double r = radii[0] * std::sqrt(2.0); r <= 0.25 + 1e-12; r *= std::sqrt(2.0)) radii.push_back(r);
    for (int k = 0; k < 20; ++k, ++fixtures_run) {
      auto f = fixtures::random_psh(m, rng, 0.0);
      std::vector<GridFunction> r;
      std::vector<double> shift;
      for (double d : radii) {
        auto kern = make_kernel(t, d);
        r.push_back(mollify(f, kern));
        // K t^2 with the lattice moment of the kernel in place of M2 t^2
        shift.push_back(m.lambda_max * kern.second_moment);
      }
      for (std::size_t j = 1; j < r.size(); ++j)
        for (std::size_t i = 0; i < t.size(); ++i) {
          double a = r[j - 1][i] + shift[j - 1];
          double b = r[j][i] + shift[j];
          worst = std::max(worst, a - b);
          worst_k0 = std::max(worst_k0, r[j - 1][i] - r[j][i]);
        }
    }
  }
  return {worst <= 1e-9, fmt::format("{} fixtures on the cone boundary, max violation {:.2e} (with K=0: {:.2e})",
                                     fixtures_run, worst, worst_k0)};
}

// Random PSD Hermitian matrix B B^* with complex B, rank deficient one time in ten.
Herm random_psd_oracle(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  double b11r = g(rng), b11i = g(rng), b12r = g(rng), b12i = g(rng);
  double b21r = g(rng), b21i = g(rng), b22r = g(rng), b22i = g(rng);
  if (std::uniform_int_distribution<int>(0, 9)(rng) == 0) {
    // second column a multiple of the first
    double s = g(rng);
    b12r = s * b11r;
    b12i = s * b11i;
    b22r = s * b21r;
    b22i = s * b21i;
  }
  if (n == 1) return {b11r * b11r + b11i * b11i + b12r * b12r + b12i * b12i, 0, 0, 0};
  Herm h;
  h.a = b11r * b11r + b11i * b11i + b12r * b12r + b12i * b12i;
  h.d = b21r * b21r + b21i * b21i + b22r * b22r + b22i * b22i;
  // (B B^*)_{12} = b11 conj(b21) + b12 conj(b22)
  h.re = b11r * b21r + b11i * b21i + b12r * b22r + b12i * b22i;
  h.im = b11i * b21r - b11r * b21i + b12i * b22r - b12r * b22i;
  return h;
}

Outcome minkowski() {
  std::mt19937_64 rng(99);
  double worst_mink = 1e300, worst_dom = 1e300;
  for (int n : {1, 2}) {
    for (int k = 0; k < 10000; ++k) {
      Herm x = random_psd_oracle(n, rng), y = random_psd_oracle(n, rng);
      double dx = std::max(0.0, oracle::det_mid(x, x, n)), dy = std::max(0.0, oracle::det_mid(y, y, n));
      double dm = oracle::det_mid(x, y, n);
      double scale = 1.0 + std::abs(dx) + std::abs(dy);
      // det((X+Y)/2)^{1/n} >= (det X^{1/n} + det Y^{1/n}) / 2
      double mink = std::pow(std::max(dm, 0.0), 1.0 / n) - 0.5 * (std::pow(dx, 1.0 / n) + std::pow(dy, 1.0 / n));
      worst_mink = std::min(worst_mink, mink / std::pow(scale, 1.0 / n));
      // the library mixed determinant against the brute-force expansion
      double lib = det(0.5 * (x + y), n);
      worst_mink = std::min(worst_mink, -std::abs(lib - dm) / scale);
      // domination form: 2^{n-1} (c1 + c2) det((X+Y)/2) >= (c1 det X + c2 det Y) / 2
      double c1 = 1.0 + k % 3, c2 = 0.5 + k % 5;
      double dom = std::ldexp(c1 + c2, n - 1) * dm - 0.5 * (c1 * dx + c2 * dy);
      worst_dom = std::min(worst_dom, dom / (scale * (c1 + c2)));
    }
  }
  return {worst_mink >= -1e-10 && worst_dom >= -1e-10,
          fmt::format("2x10^4 pairs, min Minkowski slack {:.2e}, min domination slack {:.2e}", worst_mink, worst_dom)};
}

// On psi = phi + a bump both sides of the estimate are linear in a, so the
// per-amplitude ratio lhs / l1^gamma moves like a^{1 - gamma}.  The fitted
// constant is the smallest one valid over the whole sample of amplitudes;
// it must hold at every amplitude and be resolution independent.
Outcome stability() {
  std::vector<double> joint;
  std::string d;
  bool ok = true;
  for (int N : {64, 128}) {
    Torus t(1, N);
    auto m = flat_metric(t);
    auto star = fixtures::product(t, 0.05);
    GridFunction phi = star - star.max();
    auto mu = ma_measure(phi, m);
    auto bump = GridFunction::sample(t, [](const Point& p) { return 1.0 - std::cos(2.0 * pi * p[0]); });
    std::vector<GridFunction> psis;
    double C = 0.0;
    d += fmt::format("N={}: ", N);
    for (double a : {1e-2, 1e-3}) {
      GridFunction psi = phi + a * bump;
      psi -= std::max(psi.max(), 0.0);
      StabilityOptions o;
      o.ledger = false;
      auto s = stability_check(psi, phi, mu, 1.0, m, o);
      ok = ok && s.lhs > 0.0;
      C = std::max(C, s.C);
      d += fmt::format("C(a={:g})={:.4f} ", a, s.C);
      psis.push_back(std::move(psi));
    }
    for (auto& psi : psis) {
      StabilityOptions o;
      o.C = C;
      o.ledger = false;
      ok = ok && stability_check(psi, phi, mu, 1.0, m, o).pass;
    }
    joint.push_back(C);
    d += fmt::format("joint C={:.5f}; ", C);
  }
  auto [lo, hi] = std::minmax_element(joint.begin(), joint.end());
  double mid = 0.5 * (*lo + *hi);
  ok = ok && *hi <= 1.5 * mid && *lo >= 0.5 * mid;
  auto g = gamma_exponent_exact(2, 1, 1);
  ok = ok && g.first == 1 && g.second == 13 && gamma_exponent(2, 1.0) == 1.0 / 13.0;
  d += fmt::format("N spread={:.4f} gamma(2,1)={}/{}", *hi / *lo, g.first, g.second);
  return {ok, d};
}

Outcome l2_certificate() {
  auto t0 = now();
  Torus t(1, 128);
  auto m = flat_metric(t);
  auto mu = lp_density_fixture(2.0, 0.5, m);
  auto rep = solve_ma(mu, m);
  auto c = hoelder_certificate(rep.phi, mu, 1.0, m, {0.125, 0.0625, 0.03125});
  double secs = seconds_since(t0);
  double klo = 1e300, khi = 0.0;
  for (auto& r : c.rows) {
    klo = std::min(klo, r.kappa_hat);
    khi = std::max(khi, r.kappa_hat);
  }
  double target = c.alpha * c.alpha1 - 0.05;
  bool ok = rep.converged && c.pass && c.modulus_exponent >= target && khi / klo < 2.0 && secs < 120.0;
  return {ok, fmt::format("pass={} alpha={:.4f} alpha1={:.4f} modulus exponent={:.4f} >= {:.4f} kappa ratio={:.3f} "
                          "C7={:.3g} t={:.2f}s",
                          c.pass, c.alpha, c.alpha1, c.modulus_exponent, target, khi / klo, c.C7, secs)};
}

Outcome capacity_fits() {
  Torus t(1, 64);
  auto m = flat_metric(t);
  auto mu = lp_density_fixture(2.0, 0.5, m);
  auto sets = fixtures::nested_sublevels(fixtures::product(t, 0.05), 8);
  std::vector<Mask> masks;
  for (auto& s : sets) masks.push_back(s.mask);
  auto caps = estimate_capacities(masks, m, 40);
  bool baseline = true, monotone = true, feasible = true;
  for (std::size_t k = 0; k < caps.size(); ++k) {
    baseline = baseline && caps[k].lower >= capacity_objective(masks[k], GridFunction(t), m);
    feasible = feasible && is_capacity_feasible(caps[k].candidate, m);
    if (k > 0) monotone = monotone && caps[k].lower >= caps[k - 1].lower;
  }
  auto vc = fit_volume_capacity(mu, masks, caps, m);
  auto ht = fit_htau(mu, masks, caps, 1.0, m);
  bool ok = baseline && monotone && feasible && vc.finite() && vc.residual <= 0.0 && ht.finite() && ht.residual <= 0.0;
  return {ok, fmt::format("8 sets; C={:.4f} alpha1={:.2f} residual={:.2e}; C_tau={:.4f} residual={:.2e}; "
                          "baseline={} monotone={} feasible={}",
                          vc.C, vc.exponent, vc.residual, ht.C, ht.residual, baseline, monotone, feasible)};
}

Outcome convexity_domination(const fs::path& scratch) {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> cdist(0.5, 2.0);
  double worst = 1e300;
  for (int n : {1, 2}) {
    Torus t(n, n == 1 ? 64 : 16);
    auto m = flat_metric(t);
    for (int k = 0; k < 20; ++k) {
      auto p1 = fixtures::random_psh(m, rng, 0.0), p2 = fixtures::random_psh(m, rng, 0.0);
      double c1 = cdist(rng), c2 = cdist(rng);
      auto w1 = ma_measure(p1, m).density(), w2 = ma_measure(p2, m).density();
      auto wm = ma_measure(0.5 * (p1 + p2), m).density();
      for (std::size_t i = 0; i < t.size(); ++i)
        worst = std::min(worst, std::ldexp(c1 + c2, n - 1) * wm[i] - 0.5 * (c1 * w1[i] + c2 * w2[i]));
    }
  }
  ExperimentConfig cfg;
  RunOptions o;
  o.out = scratch / "mixture";
  auto r = run("mixture", cfg, o);
  bool pipeline = r.exit_code == kExitPass;
  return {worst >= -1e-10 && pipeline,
          fmt::format("40 mixtures, min slack {:.3e}; standard pipeline exit={}", worst, r.exit_code)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const fs::path& scratch) {
  fs::path cfg = scratch / "sweep.cfg";
  std::ofstream(cfg) << "[fixture]\nname = random\n[sweep]\ncommand = certificate\nN = 64, 128\ntau = 0.5, 1\n";
  std::vector<int> status;
  for (int run = 0; run < 2; ++run) {
    std::string cmd = fmt::format("{} sweep --config {} --out {} --seed 7 --threads {} >/dev/null 2>&1", CMALAB_BINARY,
                                  cfg.string(), (scratch / fmt::format("sweep{}", run)).string(), run == 0 ? 1 : 4);
    int raw = std::system(cmd.c_str());
    status.push_back(WIFEXITED(raw) ? WEXITSTATUS(raw) : -1);
  }
  int files = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(scratch / "sweep0")) {
    if (e.path().extension() != ".csv") continue;
    fs::path other = scratch / "sweep1" / fs::relative(e.path(), scratch / "sweep0");
    ++files;
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differ;
  }
  return {files > 0 && differ == 0 && status[0] == status[1],
          fmt::format("{} CSV files compared across 1 and 4 threads, {} differ, exit={},{}", files, differ, status[0],
                      status[1])};
}

}  // namespace

int main() {
  fs::path scratch = fs::temp_directory_path() / fmt::format("cmalab_acceptance_{}", ::getpid());
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"manufactured-solution recovery", manufactured_recovery},
      {"mass conservation along continuation", mass_conservation},
      {"kernel normalization", kernel_normalization},
      {"monotonicity of rho_t phi + K t^2", monotonicity},
      {"mixed-form determinant inequality", minkowski},
      {"stability estimate", stability},
      {"Hoelder certificate on the L2 fixture", l2_certificate},
      {"volume-capacity fits", capacity_fits},
      {"convexity domination", [&] { return convexity_domination(scratch); }},
      {"sweep determinism", [&] { return determinism(scratch); }},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o{false, ""};
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    fmt::print("[{}] {:2d} {}: {}\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail);
    std::fflush(stdout);
  }
  fs::remove_all(scratch);
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
