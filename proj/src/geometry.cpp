#include "cma/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cma/error.hpp"
#include "cma/regularize.hpp"
#include "cma/spectral.hpp"

namespace cma {

Torus::Torus(int n, int N) : n_(n), N_(N) {
  if (n != 1 && n != 2) throw InvalidInput("torus dimension must be 1 or 2");
  if (N < 8 || (N & (N - 1)) != 0)
    throw InvalidInput("lattice size must be a power of two and at least 8");
  size_ = 1;
  for (int a = 0; a < 2 * n; ++a) size_ *= static_cast<std::size_t>(N);
  cell_volume_ = std::pow(1.0 / N, 2 * n);
}

std::array<int, 4> Torus::multi_index(std::size_t idx) const {
  std::array<int, 4> m{};
  for (int a = real_dim() - 1; a >= 0; --a) {
    m[a] = static_cast<int>(idx % N_);
    idx /= N_;
  }
  return m;
}

std::size_t Torus::linear_index(const std::array<int, 4>& m) const {
  std::size_t idx = 0;
  for (int a = 0; a < real_dim(); ++a) {
    int v = ((m[a] % N_) + N_) % N_;
    idx = idx * N_ + static_cast<std::size_t>(v);
  }
  return idx;
}

Point Torus::point(std::size_t idx) const {
  auto m = multi_index(idx);
  Point p{};
  for (int a = 0; a < real_dim(); ++a) p[a] = m[a] * spacing();
  return p;
}

// ---------------------------------------------------------------------------

GridFunction::GridFunction(const Torus& torus, double value)
    : torus_(torus), values_(torus.size(), value) {}

GridFunction::GridFunction(const Torus& torus, std::vector<double> values)
    : torus_(torus), values_(std::move(values)) {
  if (values_.size() != torus_.size()) throw InvalidInput("grid function size does not match torus");
}

GridFunction GridFunction::sample(const Torus& torus,
                                  const std::function<double(const Point&)>& f) {
  std::vector<double> v(torus.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(torus.point(i));
  return GridFunction(torus, std::move(v));
}

double GridFunction::max() const { return *std::max_element(values_.begin(), values_.end()); }
double GridFunction::min() const { return *std::min_element(values_.begin(), values_.end()); }

double GridFunction::sup_norm() const {
  double s = 0.0;
  for (double v : values_) s = std::max(s, std::abs(v));
  return s;
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}
GridFunction& GridFunction::operator-=(const GridFunction& o) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}
GridFunction& GridFunction::operator+=(double c) {
  for (double& v : values_) v += c;
  return *this;
}
GridFunction& GridFunction::operator-=(double c) {
  for (double& v : values_) v -= c;
  return *this;
}
GridFunction& GridFunction::operator*=(double c) {
  for (double& v : values_) v *= c;
  return *this;
}

// ---------------------------------------------------------------------------

double trace(const Herm& m, int n) { return n == 1 ? m.a : m.a + m.d; }

double det(const Herm& m, int n) {
  return n == 1 ? m.a : m.a * m.d - (m.re * m.re + m.im * m.im);
}

namespace {
// Eigenvalues (low, high) of a 2x2 Hermitian matrix.
std::pair<double, double> eig2(const Herm& m) {
  double mean = 0.5 * (m.a + m.d);
  double r = std::hypot(0.5 * (m.a - m.d), std::hypot(m.re, m.im));
  return {mean - r, mean + r};
}
}  // namespace

double min_eigenvalue(const Herm& m, int n) { return n == 1 ? m.a : eig2(m).first; }
double max_eigenvalue(const Herm& m, int n) { return n == 1 ? m.a : eig2(m).second; }

Herm operator+(const Herm& x, const Herm& y) {
  return {x.a + y.a, x.d + y.d, x.re + y.re, x.im + y.im};
}
Herm operator-(const Herm& x, const Herm& y) {
  return {x.a - y.a, x.d - y.d, x.re - y.re, x.im - y.im};
}
Herm operator*(double s, const Herm& x) { return {s * x.a, s * x.d, s * x.re, s * x.im}; }

double mixed_det(const Herm& x, const Herm& y, int n) {
  if (n == 1) return 0.5 * (x.a + y.a);
  return 0.5 * (x.a * y.d + x.d * y.a) - (x.re * y.re + x.im * y.im);
}

double min_generalized_eigenvalue(const Herm& h, const Herm& g, int n) {
  if (n == 1) return h.a / g.a;
  // det(h - mu g) = det(g) mu^2 - 2 D(h, g) mu + det(h)
  double qa = det(g, 2);
  double qb = -2.0 * mixed_det(h, g, 2);
  double qc = det(h, 2);
  double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
  return (-qb - std::sqrt(disc)) / (2.0 * qa);
}

Herm clamp_eigenvalues(const Herm& m, int n, double floor) {
  if (n == 1) return {std::max(m.a, floor), 0.0, 0.0, 0.0};
  auto [lo, hi] = eig2(m);
  if (lo >= floor) return m;
  double lo_c = std::max(lo, floor);
  double hi_c = std::max(hi, floor);
  if (hi - lo < 1e-300) return {lo_c, lo_c, 0.0, 0.0};
  // m = lo P_lo + hi P_hi with P_hi = (m - lo I) / (hi - lo).
  Herm p_hi{(m.a - lo) / (hi - lo), (m.d - lo) / (hi - lo), m.re / (hi - lo), m.im / (hi - lo)};
  Herm p_lo{1.0 - p_hi.a, 1.0 - p_hi.d, -p_hi.re, -p_hi.im};
  return lo_c * p_lo + hi_c * p_hi;
}

// ---------------------------------------------------------------------------

HermitianField complex_hessian(const GridFunction& f) {
  const Torus& t = f.torus();
  HermitianField h(t);
  // Anchoring at f[0] makes the result depend on differences of values only,
  // so adding an exactly representable constant leaves it bit-identical.
  std::vector<double> anchored(f.values().begin(), f.values().end());
  const double ref = anchored[0];
  for (double& v : anchored) v -= ref;
  spectral::Spectrum s = spectral::forward(t, anchored);
  using spectral::HessianEntry;
  auto entry = [&](HessianEntry e) {
    return spectral::apply_symbol(t, s, [e](const spectral::Mode& m) {
      return spectral::hessian_symbol(e, m);
    });
  };
  auto a = entry(HessianEntry::A);
  for (std::size_t i = 0; i < t.size(); ++i) h[i].a = a[i];
  if (t.n() == 2) {
    auto d = entry(HessianEntry::D);
    auto re = entry(HessianEntry::Re);
    auto im = entry(HessianEntry::Im);
    for (std::size_t i = 0; i < t.size(); ++i) {
      h[i].d = d[i];
      h[i].re = re[i];
      h[i].im = im[i];
    }
  }
  return h;
}

double integrate(std::span<const double> density, const HermitianMetric& metric) {
  double sum = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) sum += density[i] * metric.det_g[i];
  return sum * metric.torus.cell_volume();
}

double integrate(const GridFunction& density, const HermitianMetric& metric) {
  return integrate(density.values(), metric);
}

double volume(const HermitianMetric& metric) {
  double sum = 0.0;
  for (double d : metric.det_g) sum += d;
  return sum * metric.torus.cell_volume();
}

// ---------------------------------------------------------------------------

HermitianMetric flat_metric(const Torus& torus) {
  HermitianMetric m{torus, HermitianField(torus), {}, 0, 0, 0, 1.0, 1.0, 0.0};
  for (std::size_t i = 0; i < torus.size(); ++i) m.g[i] = {1.0, torus.n() == 2 ? 1.0 : 0.0, 0, 0};
  m.det_g.assign(torus.size(), 1.0);
  // phi omega-psh => phi + |z - z0|^2 psh, and rho_t |z - z0|^2 = |z - z0|^2 + M2 t^2.
  m.K = kernel_second_moment(torus.n());
  return m;
}

HermitianMetric conformal_metric(const Torus& torus, double amplitude) {
  if (!(std::abs(amplitude) < 0.5)) throw InvalidInput("conformal amplitude must satisfy |a| < 0.5");
  if (amplitude == 0.0) return flat_metric(torus);

  const int n = torus.n();
  const std::size_t size = torus.size();
  GridFunction sigma = GridFunction::sample(torus, [amplitude](const Point& p) {
    return amplitude * std::cos(2.0 * std::numbers::pi * p[0]);
  });
  GridFunction e(torus);
  for (std::size_t i = 0; i < size; ++i) e[i] = std::exp(sigma[i]);

  HermitianMetric m{torus, HermitianField(torus), std::vector<double>(size), 0, 0, 0,
                    e.min(), e.max(), amplitude};
  for (std::size_t i = 0; i < size; ++i) {
    m.g[i] = {e[i], n == 2 ? e[i] : 0.0, 0, 0};
    m.det_g[i] = std::pow(e[i], n);
  }

  // Coarse sup-bounds from spectral derivatives of the conformal factor e:
  //   L = sup |grad e|                               (Lipschitz bound of g)
  //   K = max(M2 (lambda_max + L/4), L / (2 lambda_min))
  //   A = sup max(0, lambda_max(i ddbar sigma)) / lambda_min
  //   B = sup (|i ddbar e|_op + |grad e|^2 / (4 e)) / lambda_min
  std::vector<double> grad2(size, 0.0);
  for (int axis = 0; axis < torus.real_dim(); ++axis) {
    auto de = spectral::first_derivative(torus, e.values(), axis);
    for (std::size_t i = 0; i < size; ++i) grad2[i] += de[i] * de[i];
  }
  HermitianField h_sigma = complex_hessian(sigma);
  HermitianField h_e = complex_hessian(e);
  double L = 0.0, A = 0.0, B = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    L = std::max(L, std::sqrt(grad2[i]));
    A = std::max(A, max_eigenvalue(h_sigma[i], n));
    double op = std::max(std::abs(min_eigenvalue(h_e[i], n)), std::abs(max_eigenvalue(h_e[i], n)));
    B = std::max(B, op + grad2[i] / (4.0 * e[i]));
  }
  const double M2 = kernel_second_moment(n);
  m.K = std::max(M2 * (m.lambda_max + 0.25 * L), L / (2.0 * m.lambda_min));
  m.A = std::max(0.0, A) / m.lambda_min;
  m.B = B / m.lambda_min;
  return m;
}

}  // namespace cma
