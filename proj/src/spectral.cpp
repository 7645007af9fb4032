#include "cma/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>

namespace cma::spectral {
namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// Planner calls are not thread-safe; execution with the new-array interface
// is.  FFTW_ESTIMATE keeps plans (and therefore results) reproducible.
std::mutex plan_mutex;
std::map<std::pair<int, int>, Plans> plan_cache;

Plans plans_for(const Torus& torus) {
  std::lock_guard lock(plan_mutex);
  auto key = std::make_pair(torus.real_dim(), torus.points_per_axis());
  auto it = plan_cache.find(key);
  if (it != plan_cache.end()) return it->second;

  std::array<int, 4> dims{};
  for (int a = 0; a < torus.real_dim(); ++a) dims[a] = torus.points_per_axis();
  RealBuffer r(static_cast<double*>(fftw_malloc(sizeof(double) * torus.size())));
  ComplexBuffer c(static_cast<fftw_complex*>(
      fftw_malloc(sizeof(fftw_complex) * spectrum_size(torus))));
  Plans p;
  p.forward = fftw_plan_dft_r2c(torus.real_dim(), dims.data(), r.get(), c.get(), FFTW_ESTIMATE);
  p.backward = fftw_plan_dft_c2r(torus.real_dim(), dims.data(), c.get(), r.get(), FFTW_ESTIMATE);
  plan_cache.emplace(key, p);
  return p;
}

}  // namespace

std::size_t spectrum_size(const Torus& torus) {
  std::size_t N = torus.points_per_axis();
  return torus.size() / N * (N / 2 + 1);
}

Spectrum forward(const Torus& torus, std::span<const double> values) {
  Plans p = plans_for(torus);
  RealBuffer r(static_cast<double*>(fftw_malloc(sizeof(double) * torus.size())));
  std::size_t ns = spectrum_size(torus);
  ComplexBuffer c(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * ns)));
  std::memcpy(r.get(), values.data(), sizeof(double) * torus.size());
  fftw_execute_dft_r2c(p.forward, r.get(), c.get());
  Spectrum out(ns);
  for (std::size_t k = 0; k < ns; ++k) out[k] = {c[k][0], c[k][1]};
  return out;
}

std::vector<double> inverse(const Torus& torus, Spectrum spectrum) {
  Plans p = plans_for(torus);
  std::size_t ns = spectrum_size(torus);
  ComplexBuffer c(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * ns)));
  for (std::size_t k = 0; k < ns; ++k) {
    c[k][0] = spectrum[k].real();
    c[k][1] = spectrum[k].imag();
  }
  RealBuffer r(static_cast<double*>(fftw_malloc(sizeof(double) * torus.size())));
  fftw_execute_dft_c2r(p.backward, c.get(), r.get());
  std::vector<double> out(torus.size());
  const double scale = 1.0 / static_cast<double>(torus.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r[i] * scale;
  return out;
}

void for_each_mode(const Torus& torus,
                   const std::function<void(std::size_t, const Mode&)>& f) {
  const int N = torus.points_per_axis();
  const int d = torus.real_dim();
  const int half = N / 2 + 1;
  // For n = 2 the Nyquist index maps to 0 so that the cross symbols below are
  // consistent with the pure ones; for n = 1 there are no cross terms and the
  // Nyquist wavenumber is kept, so every mean-zero field is reachable.
  const bool keep_nyquist = torus.n() == 1;
  auto wave = [N, keep_nyquist](int i) -> double {
    if (2 * i == N) return keep_nyquist ? N / 2 : 0.0;
    return i < N / 2 ? i : i - N;
  };
  std::size_t ns = spectrum_size(torus);
  std::array<int, 4> idx{};
  for (std::size_t k = 0; k < ns; ++k) {
    std::size_t rem = k;
    idx[d - 1] = static_cast<int>(rem % half);
    rem /= half;
    for (int a = d - 2; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % N);
      rem /= N;
    }
    Mode m{};
    for (int a = 0; a < d; ++a) m[a] = wave(idx[a]);
    f(k, m);
  }
}

double hessian_symbol(HessianEntry e, const Mode& m) {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  switch (e) {
    case HessianEntry::A: return -pi2 * (m[0] * m[0] + m[1] * m[1]);
    case HessianEntry::D: return -pi2 * (m[2] * m[2] + m[3] * m[3]);
    case HessianEntry::Re: return -pi2 * (m[0] * m[2] + m[1] * m[3]);
    case HessianEntry::Im: return -pi2 * (m[0] * m[3] - m[1] * m[2]);
  }
  return 0.0;
}

double trace_laplacian_symbol(const Mode& m) {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  return -pi2 * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2] + m[3] * m[3]);
}

std::vector<double> apply_symbol(const Torus& torus, const Spectrum& spectrum,
                                 const std::function<double(const Mode&)>& symbol) {
  Spectrum s(spectrum.size());
  for_each_mode(torus, [&](std::size_t k, const Mode& m) { s[k] = symbol(m) * spectrum[k]; });
  return inverse(torus, std::move(s));
}

std::vector<double> first_derivative(const Torus& torus, std::span<const double> values,
                                     int axis) {
  Spectrum s = forward(torus, values);
  const double two_pi = 2.0 * std::numbers::pi;
  const double nyquist = torus.points_per_axis() / 2;
  for_each_mode(torus, [&](std::size_t k, const Mode& m) {
    const double w = std::abs(m[axis]) == nyquist ? 0.0 : m[axis];
    s[k] *= std::complex<double>(0.0, two_pi * w);
  });
  return inverse(torus, std::move(s));
}

std::vector<double> solve_trace_laplacian(const Torus& torus, std::span<const double> rhs) {
  Spectrum s = forward(torus, rhs);
  for_each_mode(torus, [&](std::size_t k, const Mode& m) {
    double sym = trace_laplacian_symbol(m);
    s[k] = sym == 0.0 ? std::complex<double>{} : s[k] / sym;
  });
  return inverse(torus, std::move(s));
}

std::vector<double> convolve(const Torus& torus, std::span<const double> f,
                             std::span<const double> kernel) {
  Spectrum a = forward(torus, f);
  Spectrum b = forward(torus, kernel);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] *= b[k];
  return inverse(torus, std::move(a));
}

}  // namespace cma::spectral
