#pragma once

// Independent reference computations.  Nothing here calls the spectral code,
// so agreement with the library is a genuine cross-check.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "cma/geometry.hpp"

namespace oracle {

inline double profile(double t) { return t < 1.0 ? std::exp(1.0 / (t - 1.0)) / ((1.0 - t) * (1.0 - t)) : 0.0; }

// Composite Simpson rule on [a, b] with an even number of panels.
template <class F>
double simpson(F f, double a, double b, int panels = 200000) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// int_{C^n} g(|z|^2) dV = pi^n / (n-1)! int_0^inf t^{n-1} g(t) dt, and (n-1)! = 1 here.
inline double radial_mass(int n) {
  const double r = simpson([n](double t) { return std::pow(t, n - 1) * profile(t); }, 0.0, 1.0);
  return std::pow(std::numbers::pi, n) * r;
}

inline double eta(int n) { return 1.0 / radial_mass(n); }

// Minimal-image squared distance of integer offsets, in lattice units.
inline double wrapped_norm2(const std::array<int, 4>& q, int d, int N) {
  double s = 0.0;
  for (int a = 0; a < d; ++a) {
    int v = ((q[a] % N) + N) % N;
    if (v > N / 2) v -= N;
    s += double(v) * v;
  }
  return s;
}

// rho_delta f by direct summation over the kernel support, kernel
// renormalized to unit discrete mass.
inline std::vector<double> brute_mollify(const cma::GridFunction& f, double delta) {
  const cma::Torus& t = f.torus();
  const int d = t.real_dim(), N = t.points_per_axis();
  const double h = t.spacing();
  const int R = static_cast<int>(std::ceil(delta / h));
  std::vector<std::array<int, 4>> offs;
  std::vector<double> w;
  std::array<int, 4> q{};
  auto rec = [&](auto&& self, int a) -> void {
    if (a == d) {
      double r2 = wrapped_norm2(q, d, N) * h * h / (delta * delta);
      if (r2 < 1.0) {
        offs.push_back(q);
        w.push_back(profile(r2));
      }
      return;
    }
    for (q[a] = -R; q[a] <= R; ++q[a]) self(self, a + 1);
    q[a] = 0;
  };
  rec(rec, 0);
  double total = 0.0;
  for (double x : w) total += x;
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t p = 0; p < t.size(); ++p) {
    auto m = t.multi_index(p);
    double s = 0.0;
    for (std::size_t k = 0; k < offs.size(); ++k) {
      std::array<int, 4> z = m;
      for (int a = 0; a < d; ++a) z[a] += offs[k][a];
      s += w[k] * f[t.linear_index(z)];
    }
    out[p] = s / total;
  }
  return out;
}

// det((X + Y)/2) by explicit expansion, the 2x2 entries written out.
inline double det_mid(const cma::Herm& x, const cma::Herm& y, int n) {
  double a = 0.5 * (x.a + y.a);
  if (n == 1) return a;
  double d = 0.5 * (x.d + y.d), re = 0.5 * (x.re + y.re), im = 0.5 * (x.im + y.im);
  return a * d - re * re - im * im;
}

// Random trigonometric polynomial of low degree in every real variable.
inline cma::GridFunction random_trig(const cma::Torus& t, std::mt19937_64& rng, int terms = 6) {
  std::uniform_int_distribution<int> k(-2, 2);
  std::uniform_real_distribution<double> c(-1.0, 1.0), ph(0.0, 2.0 * std::numbers::pi);
  struct Term {
    std::array<int, 4> k;
    double c, ph;
  };
  std::vector<Term> ts;
  for (int i = 0; i < terms; ++i) {
    Term tm{{}, c(rng), ph(rng)};
    for (int a = 0; a < t.real_dim(); ++a) tm.k[a] = k(rng);
    ts.push_back(tm);
  }
  return cma::GridFunction::sample(t, [&](const cma::Point& p) {
    double s = 0.0;
    for (auto& tm : ts) {
      double arg = tm.ph;
      for (int a = 0; a < 4; ++a) arg += 2.0 * std::numbers::pi * tm.k[a] * p[a];
      s += tm.c * std::cos(arg);
    }
    return s;
  });
}

}  // namespace oracle
