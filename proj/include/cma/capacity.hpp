#pragma once

// Lower bounds for the Bedford-Taylor capacity
//   cap(E) = sup { int_E omega_v^n : v omega-psh, 0 <= v <= 1 }
// by projected ascent over feasible candidates, and fits of the
// volume-capacity inequalities
//   mu(K) <= C exp(-alpha1 / cap(K)^{1/n})      and      mu(K) <= C_tau cap(K)^{1+tau}.
//
// Capacities are only ever bounded from below.  Both inequalities have the
// capacity on the right, so lower bounds make the checks harder, never easier.

#include <span>
#include <vector>

#include "cma/geometry.hpp"
#include "cma/pluripotential.hpp"

namespace cma {

using Mask = std::vector<char>;

struct CapacityEstimate {
  double lower = 0.0;
  GridFunction candidate;
  int iterations = 0;
};

/// int_E omega_v^n (no feasibility check).
double capacity_objective(std::span<const char> mask, const GridFunction& v,
                          const HermitianMetric& metric);

/// 0 <= v <= 1 and psh_defect(v) >= -tol.
bool is_capacity_feasible(const GridFunction& v, const HermitianMetric& metric);

/// Affine map lambda (w - min w) with the largest lambda keeping the result
/// in [0, 1] and omega-psh; constant input yields v = 0.
GridFunction make_feasible(const GridFunction& w, const HermitianMetric& metric);

/// Pointwise eigenvalue clamp of g + H v followed by reconstruction from the
/// trace, at most `passes` times.  Not a projection; callers re-verify.
GridFunction psh_repair(const GridFunction& v, const HermitianMetric& metric, int passes = 5);

CapacityEstimate estimate_capacity(std::span<const char> mask, const HermitianMetric& metric,
                                   int budget);
CapacityEstimate estimate_capacity(const SublevelSet& set, const HermitianMetric& metric, int budget);

/// Estimates every mask, then re-evaluates all masks against the pooled
/// candidates, so nested masks receive monotone estimates.
std::vector<CapacityEstimate> estimate_capacities(std::span<const Mask> masks,
                                                  const HermitianMetric& metric, int budget);

struct DecayFit {
  enum class Kind { VolumeCapacity, PowerLaw };
  Kind kind = Kind::VolumeCapacity;
  double C = 0.0;
  /// alpha1 for VolumeCapacity, tau for PowerLaw.
  double exponent = 0.0;
  /// max_i (mu(K_i) - bound_i); <= 0 on the fitted sample.
  double residual = 0.0;
  std::vector<double> cap_lower;
  std::vector<double> mu_mass;
  bool finite() const;
};

/// Scans alpha1 in {0.1, ..., 1.0} and keeps the largest one with finite C.
DecayFit fit_volume_capacity(const MeasureField& mu, std::span<const Mask> sets,
                             std::span<const CapacityEstimate> caps, const HermitianMetric& metric);
DecayFit fit_volume_capacity(const MeasureField& mu, std::span<const SublevelSet> sets,
                             const HermitianMetric& metric, int budget = 40);

DecayFit fit_htau(const MeasureField& mu, std::span<const Mask> sets,
                  std::span<const CapacityEstimate> caps, double tau, const HermitianMetric& metric);
DecayFit fit_htau(const MeasureField& mu, std::span<const SublevelSet> sets, double tau,
                  const HermitianMetric& metric, int budget = 40);

/// C_tau implied by a volume-capacity fit through
///   exp(-alpha1 x^{-1/n}) <= (n (1 + tau) / (e alpha1))^{n (1 + tau)} x^{1 + tau}.
double htau_constant_from_volume_capacity(const DecayFit& fit, int n, double tau);

}  // namespace cma
