#pragma once

// Standard test and experiment fixtures.  Randomized fixtures take an explicit
// engine so that a seed reproduces them exactly.

#include <random>
#include <vector>

#include "cma/geometry.hpp"
#include "cma/pluripotential.hpp"

namespace cma::fixtures {

/// a cos(2 pi x1).
GridFunction cosine(const Torus& torus, double amplitude);

/// a (cos 2 pi x1 + cos 2 pi x2); reduces to cosine() for n = 1.
GridFunction product(const Torus& torus, double amplitude);

/// Hoelder-1/2 subsolution of n = 1 behaving like a |z - z0|^{1/2} at the
/// centre z0 of the fundamental domain.  It is built from its Monge-Ampere
/// density 1 + (a/4) Laplacian (sin^2 pi x + sin^2 pi y)^{1/2} (cell-averaged
/// at z0, renormalized to mean one), hence omega-psh on the lattice exactly.
GridFunction hoelder_subsolution(const Torus& torus, double amplitude = 0.1);

/// (1 + 0.5 cos 2 pi y1) omega_u^n, a measure with non-constant density
/// against omega_u^n.
MeasureField modulated_measure(const GridFunction& u, const HermitianMetric& metric);

/// Random trigonometric polynomial with wavenumbers up to 3, scaled so that
/// g + H f >= margin g at every lattice point.
GridFunction random_psh(const HermitianMetric& metric, std::mt19937_64& rng, double margin = 0.1);

/// Random positive semidefinite Hermitian matrix, occasionally singular.
Herm random_psd(int n, std::mt19937_64& rng);

/// Nested sublevel sets {f < inf f + s_k} with s_k = osc(f) k / count.
std::vector<SublevelSet> nested_sublevels(const GridFunction& f, int count);

}  // namespace cma::fixtures
