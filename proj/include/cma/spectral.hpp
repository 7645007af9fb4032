#pragma once

// Fourier machinery on the periodic lattice (FFTW real-to-complex transforms).

#include <array>
#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "cma/geometry.hpp"

namespace cma::spectral {

using Spectrum = std::vector<std::complex<double>>;

/// Integer wavenumbers per real axis.  For n = 2 the Nyquist index maps to 0
/// so that every second-derivative symbol is a product of first-derivative
/// symbols; this keeps the discrete null-Lagrangian identity (total
/// Monge-Ampere mass) exact.  For n = 1 the Nyquist wavenumber is kept.
using Mode = std::array<double, 4>;

std::size_t spectrum_size(const Torus& torus);

/// Unnormalized forward transform.
Spectrum forward(const Torus& torus, std::span<const double> values);
/// Inverse transform including the 1/size normalization.
std::vector<double> inverse(const Torus& torus, Spectrum spectrum);

/// Calls f(k, mode) for every spectral index.
void for_each_mode(const Torus& torus,
                   const std::function<void(std::size_t, const Mode&)>& f);

enum class HessianEntry { A, D, Re, Im };

/// Fourier symbol of a Hessian entry: A = f_{1 1bar}, D = f_{2 2bar},
/// Re/Im = real and imaginary parts of f_{1 2bar}.
double hessian_symbol(HessianEntry e, const Mode& m);
/// Symbol of the trace Laplacian sum_j f_{j jbar} = Laplacian / 4.
double trace_laplacian_symbol(const Mode& m);

/// Multiplies the spectrum by a real symbol and transforms back.
std::vector<double> apply_symbol(const Torus& torus, const Spectrum& spectrum,
                                 const std::function<double(const Mode&)>& symbol);

/// Spectral first derivative along real axis `axis`.
std::vector<double> first_derivative(const Torus& torus, std::span<const double> values, int axis);

/// Mean-zero v with (Laplacian / 4) v = rhs - mean(rhs).
std::vector<double> solve_trace_laplacian(const Torus& torus, std::span<const double> rhs);

/// Circular convolution sum_q kernel[q] f[p - q] (kernel given on the lattice).
std::vector<double> convolve(const Torus& torus, std::span<const double> f,
                             std::span<const double> kernel);

}  // namespace cma::spectral
