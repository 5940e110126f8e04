#pragma once

#include <vector>

#include "qht/state.hpp"

namespace qht {

/// Gaussian detection noise, Y = sqrt(eta) X + sqrt((1-eta)/2) xi.
struct NoiseModel {
  double eta = 1.0;

  static NoiseModel make(double eta);
  /// gamma = (1 - eta) / (4 eta); zero iff eta == 1.
  double gamma() const { return (1.0 - eta) / (4.0 * eta); }
  /// Standard deviation of the additive noise term.
  double noise_sd() const;
};

/// W_rho(q,p) = sum rho_{m,n} W_{m,n}(q,p). Raises NumericError when the
/// imaginary residual exceeds 1e-10 (relative to sum |rho_{m,n}|).
double wigner_eval(const DensityMatrix& rho, double q, double p);

/// Fourier transform of W_rho, kernel e^{-i(uq+vp)}.
Complex wigner_ft_eval(const DensityMatrix& rho, double u, double v);

/// Fock-basis bilinear form for the quadrature density p_rho(x, phi). For a
/// fixed x it precomputes the diagonal sums c_d(x) = sum_{n-m=d} rho_{m,n}
/// h_m(x) h_n(x) so that any number of angles cost O(dim) each.
class QuadratureProfile {
 public:
  QuadratureProfile(const DensityMatrix& rho, double x);
  /// Unclipped value of sum_d c_d e^{i d phi}.
  double operator()(double phi) const;

 private:
  std::vector<Complex> diag_;  // index d + dim - 1
  int dim_;
};

/// Angle-phase convention of the bilinear form: p = Re sum rho_{m,n} h_m h_n
/// e^{+i phi (n - m)}, fixed by agreement with the Radon transform of
/// wigner_eval.
inline constexpr int kQuadraturePhaseSign = +1;

/// Quadrature density p_rho(x, phi), phi in [0, pi]. Round-off down to
/// -1e-10 is clipped to zero; anything more negative raises NumericError
/// unless rho is a raw estimate, in which case the unclipped value is
/// returned.
double quadrature_density(const DensityMatrix& rho, double x, double phi);

/// Density of Y given Phi = phi under the noise model.
double noisy_density(const DensityMatrix& rho, const NoiseModel& noise, double y, double phi);

struct AngleBoundOptions {
  double x_max = 8.0;
  double x_step = 0.1;
};

struct AngleBoundReport {
  double sup_clean = 0.0;  // sup_x of int_0^pi p_rho(x, phi) dphi
  double sup_noisy = 0.0;  // sup_y of int_0^pi p^eta_rho(y, phi) dphi
  double min_clean_integrand = 0.0;
  double min_noisy_integrand = 0.0;
  bool finite = true;
  bool nonnegative = true;
};

AngleBoundReport angle_integrated_bound_check(const DensityMatrix& rho, const NoiseModel& noise,
                                              const AngleBoundOptions& options = {});

}  // namespace qht
