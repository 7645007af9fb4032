#pragma once

// Discretized flat complex torus C^n / (Z + iZ)^n, Hermitian metrics on it,
// spectral complex Hessians and lattice integration.
//
// Real axes are ordered (x1, y1, x2, y2) with z_j = x_j + i y_j.  Lattice
// arrays are row-major in that order, so the last real axis varies fastest.
// Convention: d^c = (i/2)(dbar - d), hence dd^c = i ddbar and for n = 1 the
// Hessian entry is f_{z zbar} = Laplacian(f) / 4.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cma {

/// A point of the covering space R^{2n}; unused trailing entries are zero.
using Point = std::array<double, 4>;

class Torus {
 public:
  /// n is the complex dimension (1 or 2); N lattice points per real axis,
  /// a power of two and at least 8.
  Torus(int n, int N);

  int n() const { return n_; }
  int points_per_axis() const { return N_; }
  int real_dim() const { return 2 * n_; }
  std::size_t size() const { return size_; }
  double spacing() const { return 1.0 / N_; }
  double cell_volume() const { return cell_volume_; }
  double volume() const { return 1.0; }

  /// Integer lattice coordinates of a linear index.
  std::array<int, 4> multi_index(std::size_t idx) const;
  /// Linear index of integer coordinates, wrapped periodically.
  std::size_t linear_index(const std::array<int, 4>& m) const;
  /// Real coordinates in [0,1)^{2n} of a lattice point.
  Point point(std::size_t idx) const;

  bool operator==(const Torus& other) const = default;

 private:
  int n_;
  int N_;
  std::size_t size_;
  double cell_volume_;
};

/// Real scalar field sampled on the lattice of a torus.
class GridFunction {
 public:
  GridFunction(const Torus& torus, double value = 0.0);
  GridFunction(const Torus& torus, std::vector<double> values);

  static GridFunction sample(const Torus& torus,
                             const std::function<double(const Point&)>& f);

  const Torus& torus() const { return torus_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double max() const;
  double min() const;
  double sup_norm() const;

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction& operator+=(double c);
  GridFunction& operator-=(double c);
  GridFunction& operator*=(double c);

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator+(GridFunction a, double c) { return a += c; }
  friend GridFunction operator-(GridFunction a, double c) { return a -= c; }
  friend GridFunction operator*(double c, GridFunction a) { return a *= c; }

 private:
  Torus torus_;
  std::vector<double> values_;
};

/// Hermitian n x n matrix for n <= 2: [[a, c], [conj(c), d]] with c = re + i im.
/// For n = 1 only `a` is meaningful.
struct Herm {
  double a = 0.0;
  double d = 0.0;
  double re = 0.0;
  double im = 0.0;
};

double trace(const Herm& m, int n);
double det(const Herm& m, int n);
double min_eigenvalue(const Herm& m, int n);
double max_eigenvalue(const Herm& m, int n);
Herm operator+(const Herm& x, const Herm& y);
Herm operator-(const Herm& x, const Herm& y);
Herm operator*(double s, const Herm& x);
/// Mixed determinant D(X, Y) with D(X, X) = det X (polarization).
double mixed_det(const Herm& x, const Herm& y, int n);
/// Smallest root mu of det(h - mu g) = 0; g must be positive definite.
double min_generalized_eigenvalue(const Herm& h, const Herm& g, int n);
/// Rebuilds the matrix from its eigen-decomposition after clamping every
/// eigenvalue to at least `floor`.
Herm clamp_eigenvalues(const Herm& m, int n, double floor);

/// Per-point Hermitian matrices over a lattice.
struct HermitianField {
  Torus torus;
  std::vector<Herm> m;

  explicit HermitianField(const Torus& t) : torus(t), m(t.size()) {}
  int n() const { return torus.n(); }
  std::size_t size() const { return m.size(); }
  const Herm& operator[](std::size_t i) const { return m[i]; }
  Herm& operator[](std::size_t i) { return m[i]; }
};

/// Hermitian metric g with the constants used by the regularization and
/// stability estimates:
///   K  monotonicity constant: rho_t f + K t^2 increasing in t for omega-psh f,
///   A  bound for the negative part of the curvature,
///   B  torsion constant bounding dd^c omega and d omega ^ d^c omega.
struct HermitianMetric {
  Torus torus;
  HermitianField g;
  std::vector<double> det_g;
  double K = 0.0;
  double A = 0.0;
  double B = 0.0;
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  double amplitude = 0.0;

  int n() const { return torus.n(); }
  bool is_flat() const { return amplitude == 0.0; }
  /// dd^c omega = 0; holds for flat metrics and for every metric on a curve.
  bool is_kahler() const { return is_flat() || torus.n() == 1; }
  /// Operator-norm scale of g used by the cone tolerance.
  double norm() const { return lambda_max; }
  double psh_tolerance() const { return 1e-8 * lambda_max; }
};

HermitianMetric flat_metric(const Torus& torus);

/// g(z) = exp(amplitude * cos(2 pi x1)) * identity, |amplitude| < 0.5.
HermitianMetric conformal_metric(const Torus& torus, double amplitude);

/// Field of d^2 f / dz_j dzbar_k, computed by Fourier differentiation.
HermitianField complex_hessian(const GridFunction& f);

/// Integral of a density taken w.r.t. the metric volume form det(g) dV.
double integrate(const GridFunction& density, const HermitianMetric& metric);
double integrate(std::span<const double> density, const HermitianMetric& metric);

/// Volume of X w.r.t. the metric.
double volume(const HermitianMetric& metric);

}  // namespace cma
