#include "cma/regularize.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "cma/error.hpp"
#include "cma/pluripotential.hpp"
#include "cma/spectral.hpp"

namespace cma {
namespace {

double sphere_area(int n) {
  // |S^{2n-1}| = 2 pi^n / (n-1)!
  return n == 1 ? 2.0 * std::numbers::pi : 2.0 * std::numbers::pi * std::numbers::pi;
}

double radial_moment(int n, int extra_power) {
  using boost::math::quadrature::gauss_kronrod;
  auto integrand = [n, extra_power](double r) {
    return kernel_profile(r * r) * std::pow(r, 2 * n - 1 + extra_power);
  };
  return gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 15, 1e-14);
}

struct KernelConstants {
  double eta;
  double second_moment;
};

KernelConstants constants(int n) {
  if (n != 1 && n != 2) throw InvalidInput("kernel constants: n must be 1 or 2");
  static const KernelConstants table[2] = {
      [] {
        double eta = 1.0 / (sphere_area(1) * radial_moment(1, 0));
        return KernelConstants{eta, eta * sphere_area(1) * radial_moment(1, 2)};
      }(),
      [] {
        double eta = 1.0 / (sphere_area(2) * radial_moment(2, 0));
        return KernelConstants{eta, eta * sphere_area(2) * radial_moment(2, 2)};
      }(),
  };
  return table[n - 1];
}

void check_radius(const Torus& torus, double delta) {
  if (delta < 2.0 * torus.spacing() * (1.0 - 1e-12))
    throw InvalidInput("mollifier radius below two lattice spacings (kernel under-resolved)");
  if (delta > 0.25 * (1.0 + 1e-12)) throw InvalidInput("mollifier radius above 1/4");
}

}  // namespace

double kernel_profile(double t) {
  if (t < 0.0 || t >= 1.0) return 0.0;
  return std::exp(1.0 / (t - 1.0)) / ((1.0 - t) * (1.0 - t));
}

double kernel_eta(int n) { return constants(n).eta; }

double kernel_second_moment(int n) { return constants(n).second_moment; }

MollifierKernel make_kernel(const Torus& torus, double delta) {
  check_radius(torus, delta);
  MollifierKernel k;
  k.n = torus.n();
  k.eta = kernel_eta(k.n);
  k.delta = delta;
  k.weights.assign(torus.size(), 0.0);

  const int d = torus.real_dim();
  const double h = torus.spacing();
  const int R = static_cast<int>(std::ceil(delta / h));
  std::array<int, 4> q{};
  double sum = 0.0, moment = 0.0;
  // Odometer over [-R, R]^d.
  for (int a = 0; a < d; ++a) q[a] = -R;
  while (true) {
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) r2 += (q[a] * h) * (q[a] * h);
    double w = k.eta * kernel_profile(r2 / (delta * delta));
    if (w > 0.0) {
      k.weights[torus.linear_index(q)] += w;
      sum += w;
      moment += w * r2;
    }
    int a = d - 1;
    while (a >= 0 && q[a] == R) q[a--] = -R;
    if (a < 0) break;
    ++q[a];
  }
  k.raw_mass = sum * torus.cell_volume() / std::pow(delta, d);
  k.second_moment = moment / sum;
  for (double& w : k.weights) w /= sum;
  return k;
}

GridFunction mollify(const GridFunction& phi, const MollifierKernel& kernel) {
  return GridFunction(phi.torus(), spectral::convolve(phi.torus(), phi.values(), kernel.weights));
}

GridFunction mollify(const GridFunction& phi, double delta, const HermitianMetric& metric) {
  (void)metric;  // flat covering: exp h_z(zeta) = z + zeta for every metric used here
  return mollify(phi, make_kernel(phi.torus(), delta));
}

KLTransform kiselman_legendre(const GridFunction& phi, double delta, double b, double K,
                              const HermitianMetric& metric) {
  if (!(b > 0.0)) throw InvalidInput("Kiselman-Legendre level b must be positive");
  const Torus& torus = phi.torus();
  check_radius(torus, delta);
  KLTransform T{b, delta, K, {}, GridFunction(torus), GridFunction(torus), GridFunction(torus)};
  const double t_min = 2.0 * torus.spacing() * (1.0 - 1e-12);
  for (double t = delta; t >= t_min; t *= 0.5) T.t_grid.push_back(t);

  for (std::size_t k = 0; k < T.t_grid.size(); ++k) {
    const double t = T.t_grid[k];
    GridFunction rho_t = mollify(phi, t, metric);
    const double shift = K * t * t + K * t - b * std::log(t / delta);
    for (std::size_t i = 0; i < torus.size(); ++i) {
      double v = rho_t[i] + shift;
      if (k == 0 || v < T.value[i]) {
        T.value[i] = v;
        T.t_opt[i] = t;
      }
    }
    if (k == 0) T.rho_delta = std::move(rho_t);
  }
  return T;
}

double hessian_lower_bound(const KLTransform& T, const HermitianMetric& metric, double A) {
  HermitianField h = complex_hessian(T.value);
  const double shift = A * T.b + 2.0 * T.K * T.delta;
  const int n = metric.n();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h.size(); ++i)
    lo = std::min(lo, min_eigenvalue(metric.g[i] + h[i] + shift * metric.g[i], n));
  return lo;
}

bool hessian_lower_bound_check(const KLTransform& T, const HermitianMetric& metric, double A,
                               double tol) {
  return hessian_lower_bound(T, metric, A) >= -tol;
}

std::vector<double> dyadic_radii(const Torus& torus) {
  std::vector<double> out;
  for (double d = 0.25; d >= 2.0 * torus.spacing() * (1.0 - 1e-12); d *= 0.5) out.push_back(d);
  return out;
}

std::vector<double> rate_radii(const Torus& torus) {
  const double lo = 2.0 * torus.spacing();
  for (double ratio : {std::sqrt(0.5), std::pow(2.0, -0.25)}) {
    std::vector<double> out;
    for (int k = 0;; ++k) {
      double d = 0.25 * std::pow(ratio, k);
      if (d < lo * (1.0 - 1e-12)) break;
      out.push_back(d);
    }
    if (out.back() > lo * (1.0 + 1e-12)) out.push_back(lo);
    if (out.size() >= 5) return out;
  }
  return {0.25, lo};
}

RateFit l1_rate(const GridFunction& phi, const MeasureField& mu, std::span<const double> deltas,
                const HermitianMetric& metric) {
  if (deltas.size() < 4) throw InvalidInput("l1_rate needs at least four radii");
  const double lo = *std::min_element(deltas.begin(), deltas.end());
  const double hi = *std::max_element(deltas.begin(), deltas.end());
  const bool decade = hi / lo >= 10.0 * (1.0 - 1e-12);
  const bool full_range = lo <= 2.0 * phi.torus().spacing() * (1.0 + 1e-9) && hi >= 0.25 * (1.0 - 1e-9);
  if (!decade && !full_range) throw InvalidInput("l1_rate radii must span a decade");

  RateFit fit;
  fit.deltas.assign(deltas.begin(), deltas.end());
  if (phi.max() == phi.min()) {
    fit.l1_diff.assign(fit.deltas.size(), 0.0);
    return fit;
  }
  const auto& w = mu.density();
  for (double delta : deltas) {
    GridFunction r = mollify(phi, delta, metric);
    double sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) sum += std::abs(r[i] - phi[i]) * w[i] * metric.det_g[i];
    fit.l1_diff.push_back(sum * phi.torus().cell_volume());
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < fit.deltas.size(); ++i) {
    if (fit.l1_diff[i] > 0.0) {
      x.push_back(std::log(fit.deltas[i]));
      y.push_back(std::log(fit.l1_diff[i]));
    }
  }
  if (x.size() < 2) {
    fit.alpha1 = 1.0;
    fit.C = 0.0;
    return fit;
  }
  LineFit line = fit_line(x, y);
  fit.alpha1 = line.slope;
  fit.C = std::exp(line.intercept);
  return fit;
}

}  // namespace cma
