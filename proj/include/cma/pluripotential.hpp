#pragma once

// omega-psh cone membership, Monge-Ampere and mixed measures, sublevel sets
// and sampled Hoelder moduli.

#include <span>
#include <vector>

#include "cma/geometry.hpp"

namespace cma {

/// Nonnegative density w.r.t. the metric volume form, with its total mass.
class MeasureField {
 public:
  /// Entries in [-1e-12, 0) are clamped to zero; anything below is rejected.
  MeasureField(GridFunction density, const HermitianMetric& metric);

  const GridFunction& density() const { return density_; }
  double mass() const { return mass_; }
  const Torus& torus() const { return density_.torus(); }

  /// mu(E) for a lattice mask.
  double mass_of(std::span<const char> mask, const HermitianMetric& metric) const;
  MeasureField scaled(double s, const HermitianMetric& metric) const;

 private:
  GridFunction density_;
  double mass_;
};

/// U(eps, s) = { phi < (1 - eps) psi + S_eps + s } with S_eps = inf (phi - (1 - eps) psi).
struct SublevelSet {
  std::vector<char> mask;
  double eps = 0.0;
  double s = 0.0;
  double S_eps = 0.0;

  std::size_t count() const;
  bool empty() const { return count() == 0; }
};

/// Smallest eigenvalue over the lattice of g + H(f).
double psh_defect(const GridFunction& f, const HermitianMetric& metric);
bool is_psh(const GridFunction& f, const HermitianMetric& metric);

/// det(g + H f) / det g, cone excursions within tolerance clamped to zero.
MeasureField ma_measure(const GridFunction& f, const HermitianMetric& metric);
/// Same from a precomputed Hessian field.
GridFunction ma_density(const HermitianField& hessian, const HermitianMetric& metric);

/// Pointwise det(M) with eigenvalues clamped at zero (lattice volume density).
double clamped_det(const Herm& m, int n);

/// Integral of omega_f^p ^ omega_u^(n-p).
double mixed_form_mass(const GridFunction& f, const GridFunction& u, int p,
                       const HermitianMetric& metric);

SublevelSet sublevel(const GridFunction& phi, const GridFunction& psi, double eps, double s);

struct HoelderFit {
  double exponent = 1.0;
  double C = 0.0;
  std::vector<double> radii;
  std::vector<double> oscillation;
};

/// Regression of log osc_r(f) on log r.  Empty `radii` selects the dyadic
/// radii 2/N, 4/N, ..., 1/4.
HoelderFit hoelder_modulus(const GridFunction& f, std::span<const double> radii = {});

/// Least-squares line y = slope * x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace cma
