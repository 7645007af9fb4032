#include "cma/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cma/error.hpp"
#include "cma/spectral.hpp"

namespace cma {
namespace {

std::vector<double> lattice_ma(const GridFunction& v, const HermitianMetric& metric) {
  HermitianField h = complex_hessian(v);
  const int n = metric.n();
  std::vector<double> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = clamped_det(metric.g[i] + h[i], n);
  return out;
}

double masked_sum(std::span<const char> mask, std::span<const double> lattice_density,
                  const Torus& torus) {
  double sum = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) sum += lattice_density[i];
  return sum * torus.cell_volume();
}

// Gradient of v -> sum_{p in E} det(g + H v)_p.  Each Hessian entry is a real
// even Fourier multiplier, hence a symmetric operator on the lattice.
GridFunction objective_gradient(std::span<const char> mask, const GridFunction& v,
                                const HermitianMetric& metric) {
  const Torus& t = v.torus();
  const int n = t.n();
  HermitianField h = complex_hessian(v);
  using spectral::HessianEntry;
  std::vector<double> grad(t.size(), 0.0);
  auto accumulate = [&](HessianEntry e, const std::vector<double>& w) {
    auto s = spectral::forward(t, w);
    auto out = spectral::apply_symbol(t, s, [e](const spectral::Mode& m) {
      return spectral::hessian_symbol(e, m);
    });
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += out[i];
  };
  std::vector<double> w(t.size());
  if (n == 1) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = mask[i] ? 1.0 : 0.0;
    accumulate(HessianEntry::A, w);
  } else {
    std::vector<Herm> M(t.size());
    for (std::size_t i = 0; i < M.size(); ++i) M[i] = metric.g[i] + h[i];
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = mask[i] ? M[i].d : 0.0;
    accumulate(HessianEntry::A, w);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = mask[i] ? M[i].a : 0.0;
    accumulate(HessianEntry::D, w);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = mask[i] ? -2.0 * M[i].re : 0.0;
    accumulate(HessianEntry::Re, w);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = mask[i] ? -2.0 * M[i].im : 0.0;
    accumulate(HessianEntry::Im, w);
  }
  return GridFunction(t, std::move(grad));
}

// Seeds: v = 0 and scaled solutions of (Laplacian / 4) w = smoothed 1_E,
// which push Monge-Ampere mass onto E.
std::vector<GridFunction> seeds(std::span<const char> mask, const HermitianMetric& metric) {
  const Torus& t = metric.torus;
  std::vector<GridFunction> out;
  out.emplace_back(t, 0.0);
  std::vector<double> ind(t.size());
  for (std::size_t i = 0; i < ind.size(); ++i) ind[i] = mask[i] ? 1.0 : 0.0;
  auto s = spectral::forward(t, ind);
  for (double width : {0.0, 2.0, 6.0}) {
    const double sigma = width * t.spacing();
    auto smooth = spectral::apply_symbol(t, s, [sigma](const spectral::Mode& m) {
      double k2 = 0;
      for (double x : m) k2 += x * x;
      return std::exp(-2.0 * std::numbers::pi * std::numbers::pi * sigma * sigma * k2);
    });
    auto w = spectral::solve_trace_laplacian(t, smooth);
    out.push_back(make_feasible(GridFunction(t, std::move(w)), metric));
  }
  return out;
}

}  // namespace

double capacity_objective(std::span<const char> mask, const GridFunction& v,
                          const HermitianMetric& metric) {
  return masked_sum(mask, lattice_ma(v, metric), metric.torus);
}

bool is_capacity_feasible(const GridFunction& v, const HermitianMetric& metric) {
  return v.min() >= 0.0 && v.max() <= 1.0 && is_psh(v, metric);
}

GridFunction make_feasible(const GridFunction& w, const HermitianMetric& metric) {
  const Torus& t = w.torus();
  const double lo = w.min();
  const double osc = w.max() - lo;
  if (!(osc > 0.0)) return GridFunction(t, 0.0);
  HermitianField h = complex_hessian(w);
  const int n = t.n();
  double lambda = 1.0 / osc;
  for (std::size_t i = 0; i < h.size(); ++i) {
    double mu = min_generalized_eigenvalue(h[i], metric.g[i], n);
    if (mu < 0.0) lambda = std::min(lambda, -1.0 / mu);
  }
  lambda *= 1.0 - 1e-9;
  GridFunction v(t);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = lambda * (w[i] - lo);
  return v;
}

GridFunction psh_repair(const GridFunction& v, const HermitianMetric& metric, int passes) {
  const Torus& t = v.torus();
  const int n = t.n();
  GridFunction cur = v;
  for (int pass = 0; pass < passes; ++pass) {
    HermitianField h = complex_hessian(cur);
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < h.size(); ++i) lo = std::min(lo, min_eigenvalue(metric.g[i] + h[i], n));
    if (lo >= 0.0) break;
    double mean = 0.0;
    for (double x : cur.values()) mean += x;
    mean /= static_cast<double>(cur.size());
    std::vector<double> target(t.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
      Herm clamped = clamp_eigenvalues(metric.g[i] + h[i], n, 0.0);
      target[i] = trace(clamped - metric.g[i], n);
    }
    auto rebuilt = spectral::solve_trace_laplacian(t, target);
    for (std::size_t i = 0; i < rebuilt.size(); ++i) cur[i] = rebuilt[i] + mean;
  }
  return cur;
}

CapacityEstimate estimate_capacity(std::span<const char> mask, const HermitianMetric& metric,
                                   int budget) {
  if (budget < 1) throw InvalidInput("capacity budget must be at least 1");
  const Torus& t = metric.torus;
  CapacityEstimate best{0.0, GridFunction(t, 0.0), 0};
  if (std::none_of(mask.begin(), mask.end(), [](char c) { return c != 0; })) return best;

  best.lower = -1.0;
  for (auto& s : seeds(mask, metric)) {
    double val = capacity_objective(mask, s, metric);
    if (is_capacity_feasible(s, metric) && val > best.lower) {
      best.lower = val;
      best.candidate = s;
    }
  }

  GridFunction v = best.candidate;
  double current = best.lower;
  double step = 0.25;
  int it = 0;
  for (; it < budget && step > 1e-6; ++it) {
    GridFunction g = objective_gradient(mask, v, metric);
    const double gnorm = g.sup_norm();
    if (!(gnorm > 0.0)) break;
    GridFunction trial = v;
    for (std::size_t i = 0; i < trial.size(); ++i)
      trial[i] = std::clamp(v[i] + step * g[i] / gnorm, 0.0, 1.0);
    trial = make_feasible(psh_repair(trial, metric), metric);
    if (!is_capacity_feasible(trial, metric)) {
      step *= 0.5;
      continue;
    }
    double val = capacity_objective(mask, trial, metric);
    if (val > current) {
      v = std::move(trial);
      current = val;
      step = std::min(1.0, step * 1.5);
    } else {
      step *= 0.5;
    }
  }
  if (current > best.lower) {
    best.lower = current;
    best.candidate = v;
  }
  best.iterations = it;
  return best;
}

CapacityEstimate estimate_capacity(const SublevelSet& set, const HermitianMetric& metric, int budget) {
  return estimate_capacity(set.mask, metric, budget);
}

std::vector<CapacityEstimate> estimate_capacities(std::span<const Mask> masks,
                                                  const HermitianMetric& metric, int budget) {
  std::vector<CapacityEstimate> out;
  out.reserve(masks.size());
  for (const auto& m : masks) out.push_back(estimate_capacity(m, metric, budget));

  std::vector<GridFunction> pool;
  pool.emplace_back(metric.torus, 0.0);
  for (const auto& e : out) pool.push_back(e.candidate);
  std::vector<std::vector<double>> densities;
  densities.reserve(pool.size());
  for (const auto& v : pool) densities.push_back(lattice_ma(v, metric));

  for (std::size_t k = 0; k < masks.size(); ++k) {
    if (std::none_of(masks[k].begin(), masks[k].end(), [](char c) { return c != 0; })) {
      out[k].lower = 0.0;
      out[k].candidate = pool[0];
      continue;
    }
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      double val = masked_sum(masks[k], densities[j], metric.torus);
      if (val > best) {
        best = val;
        arg = j;
      }
    }
    out[k].lower = best;
    out[k].candidate = pool[arg];
  }
  return out;
}

// ---------------------------------------------------------------------------

bool DecayFit::finite() const { return std::isfinite(C) && C >= 0.0; }

namespace {

std::vector<double> masses(const MeasureField& mu, std::span<const Mask> sets,
                           const HermitianMetric& metric) {
  std::vector<double> out;
  for (const auto& s : sets) out.push_back(mu.mass_of(s, metric));
  return out;
}

void check_sample(std::span<const CapacityEstimate> caps, const MeasureField& mu) {
  if (caps.size() < 5) throw InvalidInput("decay fit needs at least five sets");
  if (!(mu.mass() > 0.0)) throw InvalidInput("decay fit needs a measure of positive mass");
  bool distinct = false;
  for (const auto& c : caps) distinct |= c.lower != caps.front().lower;
  if (!distinct) throw InvalidInput("decay fit is degenerate: all capacity estimates are equal");
}

// Smallest C with m_i <= C b_i for all i, nudged up until the residual is
// nonpositive in floating point.
double smallest_constant(const std::vector<double>& m, const std::vector<double>& b, double& residual) {
  double C = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] <= 0.0) continue;
    if (!(b[i] > 0.0)) {
      residual = std::numeric_limits<double>::infinity();
      return std::numeric_limits<double>::infinity();
    }
    C = std::max(C, m[i] / b[i]);
  }
  for (int k = 0; k < 64; ++k) {
    residual = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m.size(); ++i) residual = std::max(residual, m[i] - C * b[i]);
    if (residual <= 0.0) break;
    C = std::nextafter(C, std::numeric_limits<double>::infinity()) * (1.0 + 1e-15);
  }
  return C;
}

std::vector<Mask> masks_of(std::span<const SublevelSet> sets) {
  std::vector<Mask> out;
  for (const auto& s : sets) out.push_back(s.mask);
  return out;
}

}  // namespace

DecayFit fit_volume_capacity(const MeasureField& mu, std::span<const Mask> sets,
                             std::span<const CapacityEstimate> caps, const HermitianMetric& metric) {
  check_sample(caps, mu);
  DecayFit fit;
  fit.kind = DecayFit::Kind::VolumeCapacity;
  fit.mu_mass = masses(mu, sets, metric);
  for (const auto& c : caps) fit.cap_lower.push_back(c.lower);
  const double n = metric.n();
  fit.C = std::numeric_limits<double>::infinity();
  fit.residual = std::numeric_limits<double>::infinity();
  for (int k = 10; k >= 1; --k) {
    const double alpha1 = 0.1 * k;
    std::vector<double> bound;
    for (double c : fit.cap_lower)
      bound.push_back(c > 0.0 ? std::exp(-alpha1 / std::pow(c, 1.0 / n)) : 0.0);
    double residual = 0.0;
    double C = smallest_constant(fit.mu_mass, bound, residual);
    if (std::isfinite(C)) {
      fit.C = C;
      fit.exponent = alpha1;
      fit.residual = residual;
      break;
    }
  }
  return fit;
}

DecayFit fit_volume_capacity(const MeasureField& mu, std::span<const SublevelSet> sets,
                             const HermitianMetric& metric, int budget) {
  auto masks = masks_of(sets);
  auto caps = estimate_capacities(masks, metric, budget);
  return fit_volume_capacity(mu, masks, caps, metric);
}

DecayFit fit_htau(const MeasureField& mu, std::span<const Mask> sets,
                  std::span<const CapacityEstimate> caps, double tau, const HermitianMetric& metric) {
  if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
  check_sample(caps, mu);
  DecayFit fit;
  fit.kind = DecayFit::Kind::PowerLaw;
  fit.exponent = tau;
  fit.mu_mass = masses(mu, sets, metric);
  std::vector<double> bound;
  for (const auto& c : caps) {
    fit.cap_lower.push_back(c.lower);
    bound.push_back(c.lower > 0.0 ? std::pow(c.lower, 1.0 + tau) : 0.0);
  }
  fit.C = smallest_constant(fit.mu_mass, bound, fit.residual);
  return fit;
}

DecayFit fit_htau(const MeasureField& mu, std::span<const SublevelSet> sets, double tau,
                  const HermitianMetric& metric, int budget) {
  auto masks = masks_of(sets);
  auto caps = estimate_capacities(masks, metric, budget);
  return fit_htau(mu, masks, caps, tau, metric);
}

double htau_constant_from_volume_capacity(const DecayFit& fit, int n, double tau) {
  const double q = n * (1.0 + tau);
  return fit.C * std::pow(q / (std::numbers::e * fit.exponent), q);
}

}  // namespace cma
