#include "cma/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cma/error.hpp"
#include "cma/regularize.hpp"
#include "cma/spectral.hpp"

namespace cma::fixtures {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

GridFunction cosine(const Torus& torus, double amplitude) {
  return GridFunction::sample(torus, [amplitude](const Point& p) { return amplitude * std::cos(kTwoPi * p[0]); });
}

GridFunction product(const Torus& torus, double amplitude) {
  if (torus.n() == 1) return cosine(torus, amplitude);
  return GridFunction::sample(torus, [amplitude](const Point& p) {
    return amplitude * (std::cos(kTwoPi * p[0]) + std::cos(kTwoPi * p[2]));
  });
}

GridFunction hoelder_subsolution(const Torus& torus, double amplitude) {
  if (torus.n() != 1) throw InvalidInput("hoelder_subsolution is defined for n = 1");
  if (!(amplitude > 0.0 && amplitude <= 0.2)) throw InvalidInput("hoelder_subsolution: amplitude must lie in (0, 0.2]");
  const double pi = std::numbers::pi;
  // Laplacian of r = (sin^2 pi x + sin^2 pi y)^{1/2} in the shifted coordinates.
  auto laplacian = [pi](double x, double y) {
    double sx = std::sin(pi * x), sy = std::sin(pi * y);
    double rho = sx * sx + sy * sy;
    double lap_rho = 2.0 * pi * pi * (std::cos(2.0 * pi * x) + std::cos(2.0 * pi * y));
    double s2x = std::sin(2.0 * pi * x), s2y = std::sin(2.0 * pi * y);
    double grad2 = pi * pi * (s2x * s2x + s2y * s2y);
    return 0.5 * lap_rho / std::sqrt(rho) - 0.25 * grad2 / std::pow(rho, 1.5);
  };
  const double h = torus.spacing();
  const int N = torus.points_per_axis();
  std::vector<double> w(torus.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto m = torus.multi_index(i);
    double x = (m[0] - N / 2) * h, y = (m[1] - N / 2) * h;
    if (m[0] == N / 2 && m[1] == N / 2) {
      const int sub = 64;
      double sum = 0.0;
      for (int a = 0; a < sub; ++a)
        for (int b = 0; b < sub; ++b)
          sum += laplacian(((a + 0.5) / sub - 0.5) * h, ((b + 0.5) / sub - 0.5) * h);
      w[i] = 1.0 + 0.25 * amplitude * sum / (sub * sub);
    } else {
      w[i] = 1.0 + 0.25 * amplitude * laplacian(x, y);
    }
  }
  double mean = 0.0;
  for (double v : w) mean += v;
  mean /= static_cast<double>(w.size());
  for (double& v : w) v = v / mean - 1.0;
  GridFunction u(torus, spectral::solve_trace_laplacian(torus, w));
  return u - u.max();
}

MeasureField modulated_measure(const GridFunction& u, const HermitianMetric& metric) {
  GridFunction w = ma_measure(u, metric).density();
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] *= 1.0 + 0.5 * std::cos(kTwoPi * metric.torus.point(i)[1]);
  return MeasureField(std::move(w), metric);
}

GridFunction random_psh(const HermitianMetric& metric, std::mt19937_64& rng, double margin) {
  const Torus& t = metric.torus;
  const int d = t.real_dim();
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_int_distribution<int> wave(-3, 3);
  std::uniform_real_distribution<double> scale(0.2, 1.0);

  struct Term {
    std::array<int, 4> k;
    double a, b;
  };
  std::vector<Term> terms(6);
  for (auto& term : terms) {
    term.k = {0, 0, 0, 0};
    bool nonzero = false;
    while (!nonzero) {
      for (int a = 0; a < d; ++a) {
        term.k[a] = wave(rng);
        nonzero |= term.k[a] != 0;
      }
    }
    term.a = coef(rng);
    term.b = coef(rng);
  }
  GridFunction f = GridFunction::sample(t, [&](const Point& p) {
    double v = 0.0;
    for (const auto& term : terms) {
      double arg = 0.0;
      for (int a = 0; a < d; ++a) arg += term.k[a] * p[a];
      v += term.a * std::cos(kTwoPi * arg) + term.b * std::sin(kTwoPi * arg);
    }
    return v;
  });
  HermitianField h = complex_hessian(f);
  double worst = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i)
    worst = std::min(worst, min_generalized_eigenvalue(h[i], metric.g[i], t.n()));
  const double s = worst < 0.0 ? scale(rng) * (1.0 - margin) / -worst : 1.0;
  return s * f;
}

Herm random_psd(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution singular(0.1);
  if (n == 1) return {singular(rng) ? 0.0 : std::abs(u(rng)) * 2.0, 0.0, 0.0, 0.0};
  // B B^* for a random complex 2 x k matrix, k = 1 gives a singular matrix.
  const int k = singular(rng) ? 1 : 2;
  Herm m;
  for (int c = 0; c < k; ++c) {
    double x1 = u(rng), y1 = u(rng), x2 = u(rng), y2 = u(rng);
    m.a += x1 * x1 + y1 * y1;
    m.d += x2 * x2 + y2 * y2;
    // (z1 conj z2)
    m.re += x1 * x2 + y1 * y2;
    m.im += y1 * x2 - x1 * y2;
  }
  return m;
}

std::vector<SublevelSet> nested_sublevels(const GridFunction& f, int count) {
  if (count < 1) throw InvalidInput("nested_sublevels: count must be positive");
  GridFunction zero(f.torus(), 0.0);
  const double osc = f.max() - f.min();
  std::vector<SublevelSet> out;
  for (int k = 1; k <= count; ++k) {
    const double s = osc > 0.0 ? osc * k / count : static_cast<double>(k);
    out.push_back(sublevel(f, zero, 0.5, s));
  }
  return out;
}

}  // namespace cma::fixtures
