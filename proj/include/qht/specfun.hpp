#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace qht::specfun {

/// Default per-index capacity. Every recurrence is rescaled so that
/// m + n up to 2 * kDefaultMaxOrder stays finite.
inline constexpr int kDefaultMaxOrder = 512;

/// Ratio between the transform  W~(u,v) = \iint e^{-i(uq+vp)} W(q,p) dq dp
/// and the closed form (-i)^{m+n}/2 * W_{m,n}(u/2, v/2) commonly quoted for
/// the Fock-basis Wigner functions. Frozen from a 2-D quadrature comparison
/// (see test_specfun.cpp, "fourier convention").
inline constexpr double kFourierConventionFactor = 2.0 * std::numbers::pi;

struct BasisIndex {
  int m = 0;
  int n = 0;

  /// s = sqrt(m + n + 1), the turning radius of W_{m,n}.
  double s() const { return std::sqrt(static_cast<double>(m + n + 1)); }
};

/// A value represented as mantissa * exp(log_scale); used where the
/// magnitude alone would overflow a double.
struct Scaled {
  double mantissa = 0.0;
  double log_scale = 0.0;

  double value() const { return mantissa * std::exp(log_scale); }
  double log_abs() const { return std::log(std::abs(mantissa)) + log_scale; }
};

double log_factorial(int n);

/// Normalized Hermite function h_m(x) = (2^m m! sqrt(pi))^{-1/2} H_m(x) e^{-x^2/2}.
double hermite_fn(int m, double x, int max_order = kDefaultMaxOrder);

/// Fills out[k] = h_k(x) for k < out.size().
void hermite_fns(double x, std::span<double> out, int max_order = kDefaultMaxOrder);
std::vector<double> hermite_fns(int count, double x, int max_order = kDefaultMaxOrder);

/// Generalized Laguerre polynomial L_n^alpha(x).
double laguerre(int n, int alpha, double x, int max_order = kDefaultMaxOrder);
Scaled laguerre_scaled(int n, int alpha, double x, int max_order = kDefaultMaxOrder);

/// Fock-basis Wigner function W_{m,n}(q,p).
std::complex<double> wigner_basis(BasisIndex idx, double q, double p,
                                  int max_order = kDefaultMaxOrder);

/// l_{m,n}(z) = |W_{m,n}(q,p)| at radius z = |(q,p)|.
double wigner_envelope(BasisIndex idx, double z, int max_order = kDefaultMaxOrder);

/// 2-D Fourier transform of W_{m,n} with kernel e^{-i(uq+vp)}.
std::complex<double> wigner_basis_ft(BasisIndex idx, double u, double v,
                                     int max_order = kDefaultMaxOrder);

}  // namespace qht::specfun
