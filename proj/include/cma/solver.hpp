#pragma once

// Damped Newton solver for (omega + dd^c phi)^n = c mu, sup phi = 0, and the
// continuation scheme mu_j = C0 h omega_{u_j}^n over mollified subsolutions.

#include <optional>
#include <utility>
#include <vector>

#include "cma/geometry.hpp"
#include "cma/pluripotential.hpp"

namespace cma {

struct SolveReport {
  explicit SolveReport(GridFunction solution) : phi(std::move(solution)) {}

  GridFunction phi;
  double c = 1.0;
  /// Sup of |det(g + H phi) / det g - c f| before the first step and after
  /// every accepted step.
  std::vector<double> residual_history;
  /// One entry per continuation stage (a single entry for a plain solve).
  std::vector<double> c_trace;
  /// ||phi_j - phi_{j-1}||_inf between consecutive stages.
  std::vector<double> cauchy;
  std::vector<int> stage_iterations;
  /// Solution of every continuation stage, filled when requested.
  std::vector<GridFunction> stage_phi;
  int iterations = 0;
  int linear_iterations = 0;
  bool converged = false;
};

struct SolveOptions {
  double tol = 1e-11;
  int max_iter = 50;
  /// Starting point; ignored when it is not strictly inside the cone.
  std::optional<GridFunction> initial;
  bool keep_stages = false;
};

/// Throws DivergenceError when 30 step halvings cannot keep g + H phi
/// positive definite.
SolveReport solve_ma(const MeasureField& mu, const HermitianMetric& metric,
                     const SolveOptions& options = {});

struct ContinuationSchedule {
  GridFunction u;
  double C0 = 1.0;
  GridFunction h;
  std::vector<double> deltas;
};

/// mu = C0 h omega_u^n with C0 = sup of the density ratio and 0 <= h <= 1.
/// Throws DominationError where mu charges a point at which omega_u^n vanishes.
ContinuationSchedule decompose_subsolution(const MeasureField& mu, const GridFunction& u,
                                           const HermitianMetric& metric);

/// Solves mu_j = C0 h omega_{u_j}^n for u_j = rho_{delta_j} u, warm-starting
/// every stage from the previous solution.  Returns the last stage with the
/// traces of all stages.
SolveReport continuation_solve(const ContinuationSchedule& schedule, const HermitianMetric& metric,
                               const SolveOptions& options = {});

}  // namespace cma
