#include "cma/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include <fmt/format.h>

#include "cma/error.hpp"
#include "cma/regularize.hpp"

namespace cma {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Smallest C (up to rounding) with lhs <= C * base, or 0 when lhs <= 0.
double ratio_constant(double lhs, double base) {
  if (!(lhs > 0.0)) return 0.0;
  if (!(base > 0.0)) return kInf;
  double C = lhs / base;
  while (C * base < lhs) C = std::nextafter(C, kInf);
  return C;
}

double l1_positive(const GridFunction& diff, const MeasureField& mu, const HermitianMetric& metric) {
  const auto& f = mu.density();
  double sum = 0.0;
  for (std::size_t i = 0; i < diff.size(); ++i) sum += std::max(diff[i], 0.0) * f[i] * metric.det_g[i];
  return sum * diff.torus().cell_volume();
}

double min_of(const GridFunction& f) { return f.min(); }

}  // namespace

bool check_subsolution(const MeasureField& mu, const GridFunction& u, double C0,
                       const HermitianMetric& metric) {
  MeasureField mu_u = ma_measure(u, metric);
  const auto& f = mu.density();
  const auto& w = mu_u.density();
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] > C0 * w[i] + 1e-10) return false;
  return true;
}

double gamma_exponent(int n, double tau) {
  if (n < 1) throw InvalidInput("gamma: dimension must be positive");
  if (!(tau > 0.0)) throw InvalidInput("gamma: tau must be positive");
  return 1.0 / (1.0 + (n + 2) * (n + 1.0 / tau));
}

std::pair<std::int64_t, std::int64_t> gamma_exponent_exact(int n, std::int64_t p, std::int64_t q) {
  if (n < 1 || p <= 0 || q <= 0) throw InvalidInput("gamma: need n >= 1 and tau = p/q > 0");
  std::int64_t num = p;
  std::int64_t den = p + (n + 2) * (n * p + q);
  std::int64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

// ---------------------------------------------------------------------------

StabilityCheck stability_check(const GridFunction& psi, const GridFunction& phi, const MeasureField& mu,
                               double tau, const HermitianMetric& metric, const StabilityOptions& options) {
  const Torus& t = metric.torus;
  const int n = t.n();
  if (!(psi.torus() == t) || !(phi.torus() == t)) throw InvalidInput("stability: torus mismatch");
  if (psi.max() > 1e-12) throw InvalidInput("stability precondition violated: psi must be <= 0");
  MeasureField ma_phi = ma_measure(phi, metric);
  double mismatch = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    mismatch = std::max(mismatch, std::abs(mu.density()[i] - ma_phi.density()[i]));
  if (mismatch > options.mismatch_tol)
    throw InvalidInput(fmt::format(
        "stability precondition violated: mu differs from the Monge-Ampere measure of phi by {:.3g}", mismatch));

  StabilityCheck out;
  out.tau = tau;
  out.gamma = gamma_exponent(n, tau);
  GridFunction diff = psi - phi;
  out.lhs = diff.max();
  out.l1 = l1_positive(diff, mu, metric);
  const double base = std::pow(out.l1, out.gamma);
  out.C = options.C ? *options.C : ratio_constant(out.lhs, base);
  out.rhs = out.C * base;
  out.pass = std::isfinite(out.C) && out.lhs <= out.rhs;
  if (!(out.lhs > 0.0)) out.pass = true;
  if (!options.ledger) return out;

  const int K = std::max(options.points, 1);
  std::vector<Mask> masks;
  struct Index { std::size_t s_mask; std::size_t st_mask; double s; double t; };
  std::vector<std::vector<Index>> plan;
  for (double eps : options.eps_list) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("stability: eps must lie in (0, 1)");
    StabilityLedger led;
    led.eps = eps;
    const double en = std::pow(eps, n);
    led.eps_B = metric.B > 0.0 ? std::min(en, eps * eps * eps / (16.0 * metric.B)) / 3.0 : en / 3.0;
    std::vector<Index> idx;
    for (int k = 0; k < K; ++k) {
      const double s = led.eps_B * std::pow(4.0, -k);
      std::size_t sm = masks.size();
      masks.push_back(sublevel(phi, psi, eps, s).mask);
      for (int l = 0; l < K; ++l) {
        const double tt = 4.0 * (1.0 - eps) * led.eps_B * std::pow(4.0, -l);
        idx.push_back({sm, masks.size(), s, tt});
        masks.push_back(sublevel(phi, psi, eps, s + tt).mask);
      }
    }
    out.ledger.push_back(std::move(led));
    plan.push_back(std::move(idx));
  }
  auto caps = estimate_capacities(masks, metric, options.capacity_budget);
  try {
    out.C_tau = fit_htau(mu, masks, caps, tau, metric).C;
  } catch (const InvalidInput&) {
    out.C_tau = std::numeric_limits<double>::quiet_NaN();
  }

  for (std::size_t e = 0; e < plan.size(); ++e) {
    StabilityLedger& led = out.ledger[e];
    for (const auto& ix : plan[e]) {
      StabilityRow r;
      r.eps = led.eps;
      r.eps_B = led.eps_B;
      r.s = ix.s;
      r.t = ix.t;
      r.cap_s = caps[ix.s_mask].lower;
      r.cap_st = caps[ix.st_mask].lower;
      r.ma_st = ma_phi.mass_of(masks[ix.st_mask], metric);
      r.hbar = std::pow(ix.s / out.C_tau, 1.0 / tau);
      const double tn = std::pow(ix.t, n);
      led.C_growth = std::max(led.C_growth, ratio_constant(tn * r.cap_s, r.ma_st));
      led.C_26 = std::max(led.C_26, ratio_constant(tn * r.cap_s, std::pow(r.cap_st, 1.0 + tau)));
      led.C_27 = std::max(led.C_27, ratio_constant(ix.s, std::pow(r.cap_s, tau / n)));
      led.rows.push_back(r);
    }
    for (auto& r : led.rows)
      r.growth_slack = led.C_growth > 0.0 ? r.ma_st - std::pow(r.t, n) * r.cap_s / led.C_growth : r.ma_st;
  }
  return out;
}

// ---------------------------------------------------------------------------

HoelderCertificate hoelder_certificate(const GridFunction& phi, const MeasureField& mu, double tau,
                                       const HermitianMetric& metric, std::vector<double> deltas) {
  const Torus& t = metric.torus;
  const int n = t.n();
  if (deltas.empty()) throw InvalidInput("certificate: empty radius list");
  if (!std::is_sorted(deltas.rbegin(), deltas.rend()))
    throw InvalidInput("certificate: radii must be decreasing");
  if (!(mu.mass() > 0.0)) throw InvalidInput("certificate: measure must have positive mass");

  HoelderCertificate cert;
  cert.n = n;
  cert.tau = tau;
  cert.gamma = gamma_exponent(n, tau);
  cert.K = metric.K;
  cert.A = metric.A;
  cert.B = metric.B;
  cert.delta0 = deltas.front();

  if (phi.max() == phi.min()) {
    cert.trivial = true;
    cert.pass = true;
    cert.alpha = cert.gamma;
    cert.kappa = cert.kappa_formula = 1.0;
    cert.modulus_exponent = kInf;
    for (double d : deltas) {
      CertificateRow r;
      r.delta = d;
      r.kappa_hat = 1.0;
      r.t0_min = d;
      r.hessian_ok = true;
      r.pass = true;
      cert.rows.push_back(r);
    }
    return cert;
  }

  MeasureField unit = mu.scaled(1.0 / mu.mass(), metric);
  auto radii = rate_radii(t);
  RateFit rate = l1_rate(phi, unit, radii, metric);
  cert.rate_deltas = rate.deltas;
  cert.rate_l1 = rate.l1_diff;
  cert.alpha1_fit = rate.alpha1;
  cert.alpha1 = std::min(rate.alpha1, 1.0);
  cert.alpha = std::min(cert.gamma, cert.alpha1);
  const double a = cert.alpha;
  const double aa1 = cert.alpha * cert.alpha1;
  const double K = metric.K;
  const double A = metric.A;
  const double tol = 1e-10 * (1.0 + phi.sup_norm());
  bool ok = cert.alpha1 > 0.0;

  struct Stage {
    KLTransform T;
    GridFunction Phi;
  };
  std::vector<std::optional<Stage>> stages;
  double beta = 0.0;
  cert.C4 = phi.sup_norm();
  for (double d : deltas) {
    CertificateRow r;
    r.delta = d;
    const double da = std::pow(d, a);
    r.b = A > 0.0 ? (da - 2.0 * K * d) / A : da;
    if (!(r.b > 0.0)) {
      // The level is only positive for small delta; the row fails.
      r.pass = false;
      ok = false;
      cert.rows.push_back(r);
      stages.emplace_back();
      continue;
    }
    beta = std::max(beta, da / r.b);
    KLTransform T = kiselman_legendre(phi, d, r.b, K, metric);
    GridFunction Phi = (1.0 - da) * T.value;
    GridFunction upper = T.rho_delta + (K * d + K * d * d);
    r.sandwich_lower = min_of(T.value - phi);
    r.sandwich_upper = min_of(upper - T.value);
    r.Phi_sup = Phi.max();
    r.gap = (Phi - phi).max();
    r.t0_min = T.t_opt.min();
    r.kappa_hat = r.t0_min / d;
    r.hessian_min = hessian_lower_bound(T, metric, A);
    r.hessian_ok = r.hessian_min >= -1e-3;
    cert.C4 = std::max(cert.C4, ratio_constant(r.Phi_sup, da));
    cert.C_t0 = std::max(cert.C_t0, ratio_constant((1.0 - da) * (T.value - phi).max(), da));
    cert.C6 = std::max(cert.C6, ratio_constant(r.gap, std::pow(d, aa1)));
    cert.rows.push_back(r);
    stages.push_back(Stage{std::move(T), std::move(Phi)});
  }

  cert.kappa_formula = std::exp(-beta * cert.C_t0 / (1.0 - std::pow(cert.delta0, a)));
  cert.kappa = kInf;
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    CertificateRow& r = cert.rows[k];
    if (!(r.b > 0.0)) continue;
    const Stage& st = *stages[k];
    const double d = r.delta;
    const double da = std::pow(d, a);
    GridFunction diff2_rhs = (1.0 - da) * (st.T.rho_delta + (K * d + K * d * d) - phi) + cert.C4 * da;
    r.diff2 = min_of(diff2_rhs - (st.Phi - phi));

    GridFunction excess = st.Phi - phi - cert.C4 * da;
    r.l1_excess = l1_positive(excess, unit, metric);
    cert.C5 = std::max(cert.C5, ratio_constant(r.gap - cert.C4 * da, std::pow(r.l1_excess, a)));

    const double kd = r.t0_min;
    GridFunction rho_k = mollify(phi, kd, metric);
    GridFunction chain_lhs = rho_k + (K * kd * kd + K * kd) - phi;
    r.chain = min_of(st.T.value - phi - chain_lhs);
    r.modulus = (rho_k - phi).max();
    cert.C7 = std::max(cert.C7, ratio_constant(r.modulus, std::pow(d, aa1)));
    cert.kappa = std::min(cert.kappa, r.kappa_hat);
    if (r.modulus > 0.0) {
      lx.push_back(std::log(d));
      ly.push_back(std::log(r.modulus));
    }
    r.pass = r.sandwich_lower >= -tol && r.sandwich_upper >= -tol && r.diff2 >= -tol &&
             r.chain >= -tol && r.kappa_hat >= cert.kappa_formula * (1.0 - 1e-12);
    ok = ok && r.pass;
  }
  cert.modulus_exponent = lx.size() >= 2 ? fit_line(lx, ly).slope : std::numeric_limits<double>::quiet_NaN();
  for (double c : {cert.C4, cert.C5, cert.C6, cert.C7, cert.C_t0}) ok = ok && std::isfinite(c);
  cert.pass = ok;
  return cert;
}

// ---------------------------------------------------------------------------

MixtureResult mixture_experiment(const GridFunction& phi1, const GridFunction& phi2, double c1, double c2,
                                 const HermitianMetric& metric, double tol, double tau,
                                 std::vector<double> deltas, const SolveOptions& solve) {
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw InvalidInput("mixture: constants must be positive");
  const int n = metric.n();
  GridFunction mid = 0.5 * (phi1 + phi2);
  MeasureField m1 = ma_measure(phi1, metric);
  MeasureField m2 = ma_measure(phi2, metric);
  MeasureField mm = ma_measure(mid, metric);
  const Torus& t = metric.torus;
  GridFunction dens(t);
  const double factor = std::pow(2.0, n - 1) * (c1 + c2);
  MixtureResult out{kInf, 0, SolveReport{GridFunction(t)}, HoelderCertificate{}};
  for (std::size_t i = 0; i < t.size(); ++i) {
    dens[i] = 0.5 * (c1 * m1.density()[i] + c2 * m2.density()[i]);
    double slack = factor * mm.density()[i] - dens[i];
    if (slack < out.domination_slack) {
      out.domination_slack = slack;
      out.worst_index = i;
    }
  }
  if (out.domination_slack < -tol)
    throw DominationError(fmt::format("mixture domination fails at lattice index {} by {:.3g}",
                                      out.worst_index, -out.domination_slack));
  MeasureField mu(std::move(dens), metric);
  out.solve = solve_ma(mu, metric, solve);
  out.certificate = hoelder_certificate(out.solve.phi, mu, tau, metric, std::move(deltas));
  return out;
}

MeasureField lp_density_fixture(double p, double s, const HermitianMetric& metric) {
  const Torus& t = metric.torus;
  const int n = t.n();
  const int d = t.real_dim();
  if (!(p > 1.0)) throw InvalidInput("lp fixture: p must exceed 1");
  if (!(s >= 0.0)) throw InvalidInput("lp fixture: singularity exponent must be nonnegative");
  if (s * p >= 2.0 * n) throw InvalidInput("lp fixture: density not in L^p (s p >= 2n)");

  const int N = t.points_per_axis();
  const double h = t.spacing();
  std::array<int, 4> centre{};
  for (int a = 0; a < d; ++a) centre[a] = N / 2;
  const std::size_t ic = t.linear_index(centre);

  GridFunction f(t, 1.0);
  if (s > 0.0) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      auto m = t.multi_index(i);
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        double x = (m[a] - N / 2) * h;
        r2 += x * x;
      }
      if (i != ic) f[i] = std::pow(r2, -0.5 * s);
    }
    // Cell average over the singular cell by an even midpoint sub-grid,
    // which never samples the singular point itself.
    const int sub = d == 2 ? 64 : 12;
    std::array<int, 4> q{};
    double sum = 0.0;
    std::size_t count = 0;
    while (true) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        double x = ((q[a] + 0.5) / sub - 0.5) * h;
        r2 += x * x;
      }
      sum += std::pow(r2, -0.5 * s);
      ++count;
      int a = d - 1;
      while (a >= 0 && q[a] == sub - 1) q[a--] = 0;
      if (a < 0) break;
      ++q[a];
    }
    f[ic] = sum / static_cast<double>(count);
  }
  f *= 1.0 / integrate(f, metric);
  return MeasureField(std::move(f), metric);
}

double lp_norm(const MeasureField& mu, double p, const HermitianMetric& metric) {
  if (!(p > 0.0)) throw InvalidInput("lp norm: p must be positive");
  GridFunction fp = mu.density();
  for (std::size_t i = 0; i < fp.size(); ++i) fp[i] = std::pow(fp[i], p);
  return std::pow(integrate(fp, metric), 1.0 / p);
}

}  // namespace cma
