#pragma once

// Independent reference implementations and small random generators shared
// by the unit tests. Nothing here calls into the library's numerics.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "qht/state.hpp"

namespace oracle {

constexpr double kPi = std::numbers::pi;

template <class F>
double gk(F&& f, double a, double b, double tol = 1e-12) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, tol);
}

/// Physicists' Hermite polynomial from its explicit sum.
inline double hermite_poly(int m, double x) {
  double sum = 0.0;
  for (int k = 0; k <= m / 2; ++k) {
    const double term = std::pow(-1.0, k) * std::tgamma(m + 1.0) /
                        (std::tgamma(k + 1.0) * std::tgamma(m - 2.0 * k + 1.0)) *
                        std::pow(2.0 * x, m - 2 * k);
    sum += term;
  }
  return sum;
}

inline double hermite_fn(int m, double x) {
  return hermite_poly(m, x) * std::exp(-x * x / 2.0) /
         std::sqrt(std::pow(2.0, m) * std::tgamma(m + 1.0) * std::sqrt(kPi));
}

/// L_n^a(x) = sum_i (-1)^i C(n+a, n-i) x^i / i!
inline double laguerre(int n, int a, double x) {
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    sum += std::pow(-1.0, i) * std::tgamma(n + a + 1.0) /
           (std::tgamma(n - i + 1.0) * std::tgamma(a + i + 1.0)) * std::pow(x, i) /
           std::tgamma(i + 1.0);
  }
  return sum;
}

/// Wigner function by direct quadrature of its defining integral
/// W(q,p) = (1/pi) \int psi_m(q + y) psi_n(q - y) e^{-2ipy} dy, with the
/// m, n ordering matching rho_{m,n} |m><n|.
inline std::complex<double> wigner_basis_integral(int m, int n, double q, double p) {
  auto re = [&](double y) {
    return hermite_fn(m, q + y) * hermite_fn(n, q - y) * std::cos(2.0 * p * y);
  };
  auto im = [&](double y) {
    return -hermite_fn(m, q + y) * hermite_fn(n, q - y) * std::sin(2.0 * p * y);
  };
  const double L = 12.0;
  return {gk(re, -L, L) / kPi, gk(im, -L, L) / kPi};
}

/// Dawson function F(x) = e^{-x^2} \int_0^x e^{t^2} dt.
inline double dawson(double x) {
  if (x == 0.0) return 0.0;
  return gk([&](double t) { return std::exp(t * t - x * x); }, 0.0, x);
}

/// Deterministic generator of test inputs.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(eng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(eng_); }
  double normal() { return std::normal_distribution<double>()(eng_); }

  /// Random mixed state of dimension `dim` with a Gaussian-weighted
  /// spectrum concentrated on low Fock numbers.
  qht::DensityMatrix state(int dim) {
    Eigen::MatrixXcd a(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        const double damp = std::exp(-0.5 * (i + j));
        a(i, j) = {normal() * damp, normal() * damp};
      }
    Eigen::MatrixXcd rho = a * a.adjoint();
    rho /= rho.trace().real();
    return qht::DensityMatrix(rho);
  }

  /// Random Hermitian matrix, not necessarily positive or normalized.
  qht::DensityMatrix hermitian(int dim) {
    Eigen::MatrixXcd a(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) a(i, j) = {normal(), normal()};
    Eigen::MatrixXcd h = (a + a.adjoint()) / 2.0;
    return qht::DensityMatrix(h, true);
  }

 private:
  std::mt19937_64 eng_;
};

/// Composite 20-point Gauss-Legendre on [a, b] with equal panels.
struct Grid1d {
  std::vector<double> x, w;
  Grid1d(double a, double b, int panels) {
    using G = boost::math::quadrature::gauss<double, 20>;
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = a + (p + 0.5) * width, half = width / 2.0;
      for (std::size_t i = 0; i < G::abscissa().size(); ++i) {
        const double t = G::abscissa()[i], wt = G::weights()[i];
        x.push_back(mid + half * t);
        w.push_back(half * wt);
        if (t != 0.0) {
          x.push_back(mid - half * t);
          w.push_back(half * wt);
        }
      }
    }
  }
};

/// \iint f(q, p) over the square [-L, L]^2.
template <class F>
auto integrate_2d(F&& f, double L, int panels) {
  const Grid1d g(-L, L, panels);
  decltype(f(0.0, 0.0)) sum{};
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    decltype(f(0.0, 0.0)) row{};
    for (std::size_t j = 0; j < g.x.size(); ++j) row += g.w[j] * f(g.x[i], g.x[j]);
    sum += g.w[i] * row;
  }
  return sum;
}

}  // namespace oracle
