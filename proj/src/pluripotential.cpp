#include "cma/pluripotential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cma/error.hpp"

namespace cma {

MeasureField::MeasureField(GridFunction density, const HermitianMetric& metric)
    : density_(std::move(density)), mass_(0.0) {
  if (!(density_.torus() == metric.torus)) throw InvalidInput("measure and metric live on different tori");
  for (std::size_t i = 0; i < density_.size(); ++i) {
    double v = density_[i];
    if (!std::isfinite(v)) throw InvalidInput("measure density is not finite");
    if (v < 0.0) {
      if (v < -1e-12) throw InvalidInput("measure density is negative");
      density_[i] = 0.0;
    }
  }
  mass_ = integrate(density_, metric);
}

double MeasureField::mass_of(std::span<const char> mask, const HermitianMetric& metric) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) sum += density_[i] * metric.det_g[i];
  return sum * metric.torus.cell_volume();
}

MeasureField MeasureField::scaled(double s, const HermitianMetric& metric) const {
  return MeasureField(s * density_, metric);
}

std::size_t SublevelSet::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), char{1}));
}

// ---------------------------------------------------------------------------

double psh_defect(const GridFunction& f, const HermitianMetric& metric) {
  HermitianField h = complex_hessian(f);
  const int n = metric.n();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h.size(); ++i) lo = std::min(lo, min_eigenvalue(metric.g[i] + h[i], n));
  return lo;
}

bool is_psh(const GridFunction& f, const HermitianMetric& metric) {
  return psh_defect(f, metric) >= -metric.psh_tolerance();
}

double clamped_det(const Herm& m, int n) {
  if (n == 1) return std::max(m.a, 0.0);
  if (min_eigenvalue(m, 2) < 0.0) return 0.0;
  return std::max(det(m, 2), 0.0);
}

GridFunction ma_density(const HermitianField& hessian, const HermitianMetric& metric) {
  const int n = metric.n();
  GridFunction out(metric.torus);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = clamped_det(metric.g[i] + hessian[i], n) / metric.det_g[i];
  return out;
}

MeasureField ma_measure(const GridFunction& f, const HermitianMetric& metric) {
  HermitianField h = complex_hessian(f);
  const int n = metric.n();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h.size(); ++i) lo = std::min(lo, min_eigenvalue(metric.g[i] + h[i], n));
  if (lo < -100.0 * metric.psh_tolerance())
    throw InvalidInput("Monge-Ampere measure of a non omega-psh function (defect " +
                       std::to_string(lo) + ")");
  return MeasureField(ma_density(h, metric), metric);
}

double mixed_form_mass(const GridFunction& f, const GridFunction& u, int p,
                       const HermitianMetric& metric) {
  const int n = metric.n();
  if (p < 0 || p > n) throw InvalidInput("mixed_form_mass: p out of range");
  HermitianField hf = complex_hessian(f);
  HermitianField hu = complex_hessian(u);
  std::vector<double> density(hf.size());
  for (std::size_t i = 0; i < hf.size(); ++i) {
    Herm x = metric.g[i] + hf[i];
    Herm y = metric.g[i] + hu[i];
    double v;
    if (p == n) v = det(x, n);
    else if (p == 0) v = det(y, n);
    else v = mixed_det(x, y, n);
    density[i] = v / metric.det_g[i];
  }
  return integrate(density, metric);
}

SublevelSet sublevel(const GridFunction& phi, const GridFunction& psi, double eps, double s) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("sublevel: eps must lie in (0, 1)");
  if (!(s > 0.0)) throw InvalidInput("sublevel: s must be positive");
  SublevelSet set;
  set.eps = eps;
  set.s = s;
  const std::size_t size = phi.size();
  double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size; ++i) inf = std::min(inf, phi[i] - (1.0 - eps) * psi[i]);
  set.S_eps = inf;
  set.mask.resize(size);
  for (std::size_t i = 0; i < size; ++i)
    set.mask[i] = phi[i] < (1.0 - eps) * psi[i] + inf + s ? 1 : 0;
  return set;
}

// ---------------------------------------------------------------------------

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

HoelderFit hoelder_modulus(const GridFunction& f, std::span<const double> radii) {
  const Torus& t = f.torus();
  const int N = t.points_per_axis();
  const int d = t.real_dim();
  HoelderFit fit;
  if (radii.empty()) {
    for (int k = 2; k <= N / 4; k *= 2) fit.radii.push_back(static_cast<double>(k) / N);
  } else {
    fit.radii.assign(radii.begin(), radii.end());
  }
  if (f.max() == f.min()) {
    fit.oscillation.assign(fit.radii.size(), 0.0);
    return fit;
  }
  const double r_max = *std::max_element(fit.radii.begin(), fit.radii.end());

  // Sampled offsets: multiples of the axis directions and of the pairwise
  // diagonals e_a +- e_b.
  std::vector<std::array<int, 4>> dirs;
  for (int a = 0; a < d; ++a) {
    std::array<int, 4> e{};
    e[a] = 1;
    dirs.push_back(e);
    for (int b = a + 1; b < d; ++b) {
      std::array<int, 4> p{}, q{};
      p[a] = 1;
      p[b] = 1;
      q[a] = 1;
      q[b] = -1;
      dirs.push_back(p);
      dirs.push_back(q);
    }
  }
  struct Offset {
    std::array<int, 4> q;
    double length;
  };
  std::vector<Offset> offsets;
  for (const auto& e : dirs) {
    double unit = 0;
    for (int a = 0; a < d; ++a) unit += e[a] * e[a];
    unit = std::sqrt(unit) * t.spacing();
    for (int k = 1; k * unit <= r_max * (1 + 1e-12); ++k) {
      std::array<int, 4> q{};
      for (int a = 0; a < d; ++a) q[a] = k * e[a];
      offsets.push_back({q, k * unit});
    }
  }

  std::vector<double> osc_per_offset(offsets.size(), 0.0);
  for (std::size_t p = 0; p < t.size(); ++p) {
    auto m = t.multi_index(p);
    for (std::size_t o = 0; o < offsets.size(); ++o) {
      std::array<int, 4> mq = m;
      for (int a = 0; a < d; ++a) mq[a] += offsets[o].q[a];
      double diff = std::abs(f[p] - f[t.linear_index(mq)]);
      osc_per_offset[o] = std::max(osc_per_offset[o], diff);
    }
  }
  for (double r : fit.radii) {
    double osc = 0.0;
    for (std::size_t o = 0; o < offsets.size(); ++o)
      if (offsets[o].length <= r * (1 + 1e-12)) osc = std::max(osc, osc_per_offset[o]);
    fit.oscillation.push_back(osc);
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < fit.radii.size(); ++i) {
    if (fit.oscillation[i] > 0) {
      x.push_back(std::log(fit.radii[i]));
      y.push_back(std::log(fit.oscillation[i]));
    }
  }
  if (x.size() < 2) return fit;
  LineFit line = fit_line(x, y);
  fit.exponent = line.slope;
  fit.C = std::exp(line.intercept);
  return fit;
}

}  // namespace cma
