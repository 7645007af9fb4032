#pragma once

// Regularization by convolution with the compactly supported kernel
//   rho(t) = eta (1 - t)^{-2} exp(1 / (t - 1)),  0 <= t < 1,
// normalized so that the integral of rho(|z|^2) over C^n is one, the
// Kiselman-Legendre transform of the family rho_t phi, and the L1 rate of
// rho_delta phi -> phi.

#include <span>
#include <vector>

#include "cma/geometry.hpp"

namespace cma {

class MeasureField;

/// Unnormalized profile (1 - t)^{-2} exp(1 / (t - 1)) on [0, 1), zero beyond.
double kernel_profile(double t);

/// Normalization constant eta for complex dimension n (cached).
double kernel_eta(int n);

/// int_{C^n} |z|^2 rho(|z|^2) dV(z).
double kernel_second_moment(int n);

struct MollifierKernel {
  int n = 1;
  double eta = 0.0;
  double delta = 0.0;
  /// Kernel values on the lattice, wrapped periodically, unit discrete mass.
  std::vector<double> weights;
  /// Discrete mass sum_q delta^{-2n} rho(|q|^2 / delta^2) h^{2n} before
  /// renormalization; tends to one as the lattice is refined.
  double raw_mass = 0.0;
  /// Lattice second moment sum_q w_q |q h|^2, the value of the discrete
  /// convolution of |. - z|^2 at z.  Tends to M2 delta^2; at two spacings it
  /// is some 13% smaller, so discrete monotonicity uses this in place of
  /// M2 t^2.
  double second_moment = 0.0;
};

/// Requires 2 * spacing <= delta <= 1/4.
MollifierKernel make_kernel(const Torus& torus, double delta);

/// rho_delta phi (z) = delta^{-2n} int phi(z + zeta) rho(|zeta|^2 / delta^2) dV(zeta).
GridFunction mollify(const GridFunction& phi, double delta, const HermitianMetric& metric);
GridFunction mollify(const GridFunction& phi, const MollifierKernel& kernel);

struct KLTransform {
  double b = 0.0;
  double delta = 0.0;
  double K = 0.0;
  /// Radii over which the infimum is taken: delta * 2^{-k}.
  std::vector<double> t_grid;
  GridFunction value;
  GridFunction t_opt;
  /// rho_delta phi, kept for the sandwich checks.
  GridFunction rho_delta;
};

/// Phi_{delta,b}(z) = inf_{t in (0, delta]} (rho_t phi(z) + K t^2 + K t - b log(t / delta))
/// over the geometric grid t = delta 2^{-k} down to two lattice spacings.
KLTransform kiselman_legendre(const GridFunction& phi, double delta, double b, double K,
                              const HermitianMetric& metric);

/// Minimum eigenvalue of g + H(Phi) + (A b + 2 K delta) g over the lattice.
double hessian_lower_bound(const KLTransform& transform, const HermitianMetric& metric, double A);

/// Diagnostic form of the Hessian bound with the tolerance 1e-3 used for the
/// non-smooth infimum.
bool hessian_lower_bound_check(const KLTransform& transform, const HermitianMetric& metric,
                               double A, double tol = 1e-3);

struct RateFit {
  double alpha1 = 1.0;
  double C = 0.0;
  std::vector<double> deltas;
  std::vector<double> l1_diff;
};

/// Regression of log ||rho_delta phi - phi||_{L1(mu)} on log delta.
/// Requires at least four radii spanning a decade, or spanning the whole
/// admissible range [2 spacing, 1/4] when the lattice cannot resolve a decade.
RateFit l1_rate(const GridFunction& phi, const MeasureField& mu, std::span<const double> deltas,
                const HermitianMetric& metric);

/// Admissible dyadic radii 1/4, 1/8, ... down to two lattice spacings.
std::vector<double> dyadic_radii(const Torus& torus);

/// Geometric radii from 1/4 down to two lattice spacings with ratio 2^{-1/2},
/// refined to 2^{-1/4} when that yields fewer than five radii.
std::vector<double> rate_radii(const Torus& torus);

}  // namespace cma
