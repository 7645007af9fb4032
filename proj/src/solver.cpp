#include "cma/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cma/capacity.hpp"
#include "cma/error.hpp"
#include "cma/regularize.hpp"
#include "cma/spectral.hpp"

namespace cma {
namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) { return std::inner_product(a.begin(), a.end(), b.begin(), 0.0); }

// Projection onto the range of the trace Laplacian: mean-zero fields without
// the Fourier modes that the discrete Hessian does not see.
void project_range(const Torus& t, Vec& v) {
  auto s = spectral::forward(t, v);
  v = spectral::apply_symbol(t, s, [](const spectral::Mode& m) {
    return spectral::trace_laplacian_symbol(m) == 0.0 ? 0.0 : 1.0;
  });
}

// Linearization of phi -> det(g + H phi) at M: sum over entries of the
// cofactor times the Hessian entry of the increment.
class Linearization {
 public:
  Linearization(const Torus& t, const std::vector<Herm>& M) : torus_(t), cof_(t.n() == 2 ? 4 : 0) {
    if (t.n() == 2) {
      for (auto& c : cof_) c.resize(M.size());
      for (std::size_t i = 0; i < M.size(); ++i) {
        cof_[0][i] = M[i].d;
        cof_[1][i] = M[i].a;
        cof_[2][i] = -2.0 * M[i].re;
        cof_[3][i] = -2.0 * M[i].im;
      }
    }
  }

  Vec apply(const Vec& x) const {
    using spectral::HessianEntry;
    auto s = spectral::forward(torus_, x);
    auto entry = [&](HessianEntry e) {
      return spectral::apply_symbol(torus_, s, [e](const spectral::Mode& m) { return spectral::hessian_symbol(e, m); });
    };
    if (torus_.n() == 1) return entry(HessianEntry::A);
    Vec out(x.size(), 0.0);
    const HessianEntry entries[4] = {HessianEntry::A, HessianEntry::D, HessianEntry::Re, HessianEntry::Im};
    for (int k = 0; k < 4; ++k) {
      Vec h = entry(entries[k]);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += cof_[k][i] * h[i];
    }
    return out;
  }

 private:
  Torus torus_;
  std::vector<Vec> cof_;
};

// Restarted GMRES for the mean-zero projection of L P y = b with the
// right preconditioner P = (Laplacian / 4)^{-1}.  Returns the increment P y.
Vec gmres(const Linearization& L, const Torus& torus, Vec b, double rel_tol, int max_iter, int& used) {
  const int restart = 30;
  project_range(torus, b);
  const double bnorm = std::sqrt(dot(b, b));
  Vec y(b.size(), 0.0);
  used = 0;
  if (!(bnorm > 0.0)) return y;

  auto op = [&](const Vec& v) {
    Vec pv = spectral::solve_trace_laplacian(torus, v);
    Vec r = L.apply(pv);
    project_range(torus, r);
    return r;
  };

  while (used < max_iter) {
    Vec r = b;
    if (used > 0) {
      Vec ay = op(y);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= ay[i];
    }
    double beta = std::sqrt(dot(r, r));
    if (beta <= rel_tol * bnorm) break;

    std::vector<Vec> V{r};
    for (double& x : V[0]) x /= beta;
    std::vector<std::vector<double>> H(restart + 1, std::vector<double>(restart, 0.0));
    std::vector<double> cs(restart), sn(restart), g(restart + 1, 0.0);
    g[0] = beta;
    int k = 0;
    for (; k < restart && used < max_iter; ++k, ++used) {
      Vec w = op(V[k]);
      for (int j = 0; j <= k; ++j) {
        H[j][k] = dot(w, V[j]);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= H[j][k] * V[j][i];
      }
      double hn = std::sqrt(dot(w, w));
      H[k + 1][k] = hn;
      for (int j = 0; j < k; ++j) {
        double t = cs[j] * H[j][k] + sn[j] * H[j + 1][k];
        H[j + 1][k] = -sn[j] * H[j][k] + cs[j] * H[j + 1][k];
        H[j][k] = t;
      }
      double den = std::hypot(H[k][k], H[k + 1][k]);
      cs[k] = H[k][k] / den;
      sn[k] = H[k + 1][k] / den;
      H[k][k] = den;
      H[k + 1][k] = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      if (std::abs(g[k + 1]) <= rel_tol * bnorm || !(hn > 0.0)) {
        ++k;
        ++used;
        break;
      }
      for (double& x : w) x /= hn;
      V.push_back(std::move(w));
    }
    std::vector<double> coef(k, 0.0);
    for (int j = k - 1; j >= 0; --j) {
      double s = g[j];
      for (int l = j + 1; l < k; ++l) s -= H[j][l] * coef[l];
      coef[j] = s / H[j][j];
    }
    for (int j = 0; j < k; ++j)
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += coef[j] * V[j][i];
    if (std::abs(g[k]) <= rel_tol * bnorm) break;
  }
  return spectral::solve_trace_laplacian(torus, y);
}

struct State {
  std::vector<Herm> M;
  Vec detM;
  double min_eig = 0.0;
};

State evaluate(const GridFunction& phi, const HermitianMetric& metric) {
  HermitianField h = complex_hessian(phi);
  const int n = metric.n();
  State s;
  s.M.resize(h.size());
  s.detM.resize(h.size());
  s.min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h.size(); ++i) {
    s.M[i] = metric.g[i] + h[i];
    s.detM[i] = det(s.M[i], n);
    s.min_eig = std::min(s.min_eig, min_eigenvalue(s.M[i], n));
  }
  return s;
}

// Mass of omega_phi^n with respect to the Lebesgue volume form.
double lhs_mass(const State& s, const Torus& t) {
  return std::accumulate(s.detM.begin(), s.detM.end(), 0.0) * t.cell_volume();
}

double sup_residual(const State& s, const MeasureField& mu, const HermitianMetric& metric, double c) {
  const auto& f = mu.density();
  double r = 0.0;
  for (std::size_t i = 0; i < s.detM.size(); ++i)
    r = std::max(r, std::abs(s.detM[i] / metric.det_g[i] - c * f[i]));
  return r;
}

void normalize_sup(GridFunction& phi) { phi -= phi.max(); }

}  // namespace

SolveReport solve_ma(const MeasureField& mu, const HermitianMetric& metric, const SolveOptions& options) {
  const Torus& t = metric.torus;
  if (!(mu.torus() == t)) throw InvalidInput("solve_ma: measure lives on a different torus");
  if (!(mu.mass() > 0.0)) throw InvalidInput("solve_ma: measure must have positive mass");
  if (!(options.tol > 0.0) || options.max_iter < 0) throw InvalidInput("solve_ma: invalid tolerance or iteration limit");

  SolveReport rep{GridFunction(t, 0.0)};
  if (options.initial && options.initial->torus() == t) {
    State s0 = evaluate(*options.initial, metric);
    if (s0.min_eig > 0.0) rep.phi = *options.initial;
  }
  normalize_sup(rep.phi);

  const bool kahler = metric.is_kahler();
  const double vol = volume(metric);
  const auto& f = mu.density();
  State s = evaluate(rep.phi, metric);
  auto update_c = [&](const State& st) { return kahler ? vol / mu.mass() : lhs_mass(st, t) / mu.mass(); };
  rep.c = update_c(s);
  double res = sup_residual(s, mu, metric, rep.c);
  rep.residual_history.push_back(res);

  while (res > options.tol && rep.iterations < options.max_iter) {
    Vec rhs(t.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = rep.c * f[i] * metric.det_g[i] - s.detM[i];
    Linearization L(t, s.M);
    int used = 0;
    Vec step = gmres(L, t, std::move(rhs), 1e-10, 300, used);
    rep.linear_iterations += used;

    double lambda = 1.0;
    bool accepted = false;
    bool stayed_in_cone = false;
    for (int halving = 0; halving <= 30; ++halving, lambda *= 0.5) {
      GridFunction trial = rep.phi;
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += lambda * step[i];
      normalize_sup(trial);
      State st = evaluate(trial, metric);
      if (!(st.min_eig > 0.0)) continue;
      stayed_in_cone = true;
      double c_new = update_c(st);
      double r_new = sup_residual(st, mu, metric, c_new);
      if (r_new <= res) {
        rep.phi = std::move(trial);
        s = std::move(st);
        rep.c = c_new;
        res = r_new;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!stayed_in_cone)
        throw DivergenceError("Newton step left the positive cone after 30 halvings");
      break;  // stalled at the rounding floor
    }
    ++rep.iterations;
    rep.residual_history.push_back(res);
  }
  rep.converged = res <= options.tol;
  rep.c_trace.push_back(rep.c);
  rep.stage_iterations.push_back(rep.iterations);
  return rep;
}

ContinuationSchedule decompose_subsolution(const MeasureField& mu, const GridFunction& u,
                                           const HermitianMetric& metric) {
  MeasureField mu_u = ma_measure(u, metric);
  const auto& f = mu.density();
  const auto& w = mu_u.density();
  const Torus& t = metric.torus;
  double C0 = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (f[i] <= 0.0) continue;
    // Densities at round-off level count as vanishing.
    if (!(w[i] > metric.psh_tolerance()))
      throw DominationError("measure charges a point where the Monge-Ampere measure of u vanishes");
    C0 = std::max(C0, f[i] / w[i]);
  }
  if (!(C0 > 0.0)) throw InvalidInput("decompose_subsolution: measure has no mass");
  GridFunction h(t);
  for (std::size_t i = 0; i < t.size(); ++i)
    h[i] = f[i] > 0.0 ? std::clamp(f[i] / (C0 * w[i]), 0.0, 1.0) : 0.0;
  return ContinuationSchedule{u, C0, std::move(h), {}};
}

SolveReport continuation_solve(const ContinuationSchedule& schedule, const HermitianMetric& metric,
                               const SolveOptions& options) {
  if (schedule.deltas.empty()) throw InvalidInput("continuation schedule has no radii");
  if (!std::is_sorted(schedule.deltas.rbegin(), schedule.deltas.rend()))
    throw InvalidInput("continuation radii must be decreasing");
  const Torus& t = metric.torus;
  SolveReport out{GridFunction(t, 0.0)};
  std::optional<GridFunction> prev = options.initial;
  int total = 0, linear = 0;
  out.converged = true;
  for (double delta : schedule.deltas) {
    GridFunction uj = mollify(schedule.u, delta, metric);
    if (!is_psh(uj, metric)) uj = psh_repair(uj, metric, 1);
    GridFunction w = ma_measure(uj, metric).density();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= schedule.C0 * schedule.h[i];
    MeasureField muj(std::move(w), metric);
    SolveOptions opt = options;
    opt.initial = prev;
    SolveReport stage = solve_ma(muj, metric, opt);
    if (prev && prev->torus() == t) {
      double d = 0.0;
      for (std::size_t i = 0; i < t.size(); ++i) d = std::max(d, std::abs(stage.phi[i] - (*prev)[i]));
      if (!out.c_trace.empty()) out.cauchy.push_back(d);
    }
    total += stage.iterations;
    linear += stage.linear_iterations;
    out.c_trace.push_back(stage.c);
    out.stage_iterations.push_back(stage.iterations);
    out.phi = stage.phi;
    out.c = stage.c;
    out.residual_history = stage.residual_history;
    out.converged = out.converged && stage.converged;
    if (options.keep_stages) out.stage_phi.push_back(stage.phi);
    prev = stage.phi;
  }
  out.iterations = total;
  out.linear_iterations = linear;
  return out;
}

}  // namespace cma
