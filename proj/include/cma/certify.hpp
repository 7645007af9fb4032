#pragma once

// Mechanized inequality chains: the L1 stability estimate with its capacity
// ledger, the Hoelder certificate built from the Kiselman-Legendre transform,
// subsolution checks, the mixture experiment and L^p density fixtures.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cma/capacity.hpp"
#include "cma/geometry.hpp"
#include "cma/pluripotential.hpp"
#include "cma/solver.hpp"

namespace cma {

/// mu <= C0 omega_u^n pointwise with 1e-10 slack.
bool check_subsolution(const MeasureField& mu, const GridFunction& u, double C0,
                       const HermitianMetric& metric);

/// gamma = 1 / (1 + (n + 2)(n + 1/tau)).
double gamma_exponent(int n, double tau);

/// gamma for tau = p/q as the reduced fraction p / (p + (n + 2)(n p + q)).
std::pair<std::int64_t, std::int64_t> gamma_exponent_exact(int n, std::int64_t p, std::int64_t q);

/// One (eps, s, t) sample of the capacity-growth estimates.
struct StabilityRow {
  double eps = 0.0;
  double eps_B = 0.0;
  double s = 0.0;
  double t = 0.0;
  double cap_s = 0.0;       // capacity lower bound of U(eps, s)
  double cap_st = 0.0;      // capacity lower bound of U(eps, s + t)
  double ma_st = 0.0;       // omega_phi^n (U(eps, s + t))
  double growth_slack = 0.0;  // ma_st - t^n cap_s / C_growth
  double hbar = 0.0;        // (s / C_tau)^{1/tau}
};

struct StabilityLedger {
  double eps = 0.0;
  double eps_B = 0.0;
  /// Smallest constants over the rows of
  ///   t^n cap(U(s)) <= C_growth omega_phi^n(U(s + t)),
  ///   t^n cap(U(s)) <= C_26 cap(U(s + t))^{1 + tau},
  ///   s <= C_27 cap(U(s))^{tau / n}.
  double C_growth = 0.0;
  double C_26 = 0.0;
  double C_27 = 0.0;
  std::vector<StabilityRow> rows;
};

struct StabilityCheck {
  double gamma = 0.0;
  double tau = 0.0;
  double lhs = 0.0;
  double l1 = 0.0;
  double rhs = 0.0;
  double C = 0.0;
  bool pass = false;
  double C_tau = 0.0;
  std::vector<StabilityLedger> ledger;
};

struct StabilityOptions {
  /// Use this constant instead of fitting the smallest admissible one.
  std::optional<double> C;
  bool ledger = true;
  std::vector<double> eps_list = {0.1, 0.2, 0.3};
  int points = 5;
  int capacity_budget = 10;
  /// Allowed sup deviation of the density of mu from that of omega_phi^n.
  double mismatch_tol = 1e-6;
};

/// sup(psi - phi) <= C ||(psi - phi)_+||_{L1(mu)}^gamma.  Requires psi <= 0 and
/// omega_phi^n = mu; throws InvalidInput otherwise.
StabilityCheck stability_check(const GridFunction& psi, const GridFunction& phi, const MeasureField& mu,
                               double tau, const HermitianMetric& metric,
                               const StabilityOptions& options = {});

struct CertificateRow {
  double delta = 0.0;
  double b = 0.0;
  /// sup (Phi_delta - phi)
  double gap = 0.0;
  /// sup Phi_delta
  double Phi_sup = 0.0;
  double t0_min = 0.0;
  double kappa_hat = 0.0;
  /// Smallest violation margins of the pointwise checks (>= 0 passes).
  double sandwich_lower = 0.0;
  double sandwich_upper = 0.0;
  double diff2 = 0.0;
  double chain = 0.0;
  double l1_excess = 0.0;
  /// sup (rho_{kappa_hat delta} phi - phi)
  double modulus = 0.0;
  double hessian_min = 0.0;
  bool hessian_ok = false;
  bool pass = false;
};

struct HoelderCertificate {
  int n = 1;
  double tau = 1.0;
  double gamma = 0.0;
  double alpha1_fit = 1.0;
  double alpha1 = 1.0;
  double alpha = 0.0;
  double K = 0.0;
  double A = 0.0;
  double B = 0.0;
  double delta0 = 0.0;
  double C4 = 0.0;
  double C5 = 0.0;
  double C6 = 0.0;
  double C7 = 0.0;
  /// Fitted constant of (1 - delta^alpha)(Phi_{delta,b} - phi) <= C_t0 delta^alpha.
  double C_t0 = 0.0;
  double kappa = 0.0;
  double kappa_formula = 0.0;
  /// Slope of log sup(rho_{kappa delta} phi - phi) against log delta.
  double modulus_exponent = 0.0;
  bool trivial = false;
  bool pass = false;
  std::vector<CertificateRow> rows;
  std::vector<double> rate_deltas;
  std::vector<double> rate_l1;
};

/// Runs the Hoelder chain for a normalized solution phi of omega_phi^n = c mu.
/// The measure is rescaled to unit mass, so the result does not depend on
/// the scale of mu.
HoelderCertificate hoelder_certificate(const GridFunction& phi, const MeasureField& mu, double tau,
                                       const HermitianMetric& metric, std::vector<double> deltas);

struct MixtureResult {
  /// min over the lattice of 2^{n-1}(c1 + c2) omega_{(phi1+phi2)/2}^n - mu.
  double domination_slack = 0.0;
  std::size_t worst_index = 0;
  SolveReport solve;
  HoelderCertificate certificate;
};

/// mu = (c1 omega_{phi1}^n + c2 omega_{phi2}^n) / 2, its domination by the
/// midpoint, a solve and a certificate.  Throws DominationError when the
/// domination fails by more than tol.
MixtureResult mixture_experiment(const GridFunction& phi1, const GridFunction& phi2, double c1, double c2,
                                 const HermitianMetric& metric, double tol, double tau,
                                 std::vector<double> deltas, const SolveOptions& solve = {});

/// Unit-mass density dist(z, z0)^{-s} with z0 the lattice point at the centre
/// of the fundamental domain, cell-averaged there.  Requires p > 1, s >= 0
/// and s p < 2n.
MeasureField lp_density_fixture(double p, double s, const HermitianMetric& metric);

/// (int f^p omega^n)^{1/p} for the density f of mu.
double lp_norm(const MeasureField& mu, double p, const HermitianMetric& metric);

}  // namespace cma
