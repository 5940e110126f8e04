#include "qht/forward.hpp"

#include <cmath>
#include <numbers>

#include "qht/error.hpp"
#include "qht/quadrature.hpp"
#include "qht/specfun.hpp"

namespace qht {
namespace {

constexpr double kNegativeRoundOff = 1e-10;
constexpr double kImagResidual = 1e-10;

void check_phi(double phi) {
  if (!(phi >= 0.0 && phi <= std::numbers::pi)) {
    throw DomainError("phase must lie in [0, pi], got " + std::to_string(phi));
  }
}

double entry_scale(const DensityMatrix& rho) {
  double s = 0.0;
  for (int m = 0; m < rho.dim(); ++m)
    for (int n = 0; n < rho.dim(); ++n) s += std::abs(rho(m, n));
  return std::max(1.0, s);
}

double clip_density(const DensityMatrix& rho, double value) {
  if (rho.raw()) return value;
  if (value < -kNegativeRoundOff) {
    throw NumericError("quadrature density is negative beyond round-off: " + std::to_string(value));
  }
  return std::max(value, 0.0);
}

}  // namespace

NoiseModel NoiseModel::make(double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("eta must lie in (0, 1]");
  return NoiseModel{eta};
}

double NoiseModel::noise_sd() const { return std::sqrt(0.5 * (1.0 - eta)); }

double wigner_eval(const DensityMatrix& rho, double q, double p) {
  Complex sum = 0.0;
  for (int m = 0; m < rho.dim(); ++m) {
    sum += rho(m, m) * specfun::wigner_basis({m, m}, q, p);
    for (int n = 0; n < m; ++n) {
      const Complex w = specfun::wigner_basis({m, n}, q, p);
      // W_{n,m} = conj(W_{m,n})
      sum += rho(m, n) * w + rho(n, m) * std::conj(w);
    }
  }
  if (std::abs(sum.imag()) > kImagResidual * entry_scale(rho)) {
    throw NumericError("Wigner function has a non-negligible imaginary part");
  }
  return sum.real();
}

Complex wigner_ft_eval(const DensityMatrix& rho, double u, double v) {
  Complex sum = 0.0;
  for (int m = 0; m < rho.dim(); ++m)
    for (int n = 0; n < rho.dim(); ++n) {
      if (rho(m, n) == Complex(0.0)) continue;
      sum += rho(m, n) * specfun::wigner_basis_ft({m, n}, u, v);
    }
  return sum;
}

QuadratureProfile::QuadratureProfile(const DensityMatrix& rho, double x)
    : diag_(static_cast<std::size_t>(2 * rho.dim() - 1)), dim_(rho.dim()) {
  const std::vector<double> h = specfun::hermite_fns(dim_, x);
  for (int m = 0; m < dim_; ++m)
    for (int n = 0; n < dim_; ++n) diag_[n - m + dim_ - 1] += rho(m, n) * (h[m] * h[n]);
}

double QuadratureProfile::operator()(double phi) const {
  // Hermitian rho makes c_{-d} = conj(c_d), so only d >= 0 is summed.
  double value = diag_[dim_ - 1].real();
  for (int d = 1; d < dim_; ++d) {
    value += 2.0 * (diag_[d + dim_ - 1] *
                    std::polar(1.0, kQuadraturePhaseSign * d * phi)).real();
  }
  return value;
}

double quadrature_density(const DensityMatrix& rho, double x, double phi) {
  check_phi(phi);
  return clip_density(rho, QuadratureProfile(rho, x)(phi));
}

double noisy_density(const DensityMatrix& rho, const NoiseModel& noise, double y, double phi) {
  check_phi(phi);
  if (!(noise.eta > 0.0 && noise.eta <= 1.0)) throw DomainError("eta must lie in (0, 1]");
  if (noise.eta == 1.0) return quadrature_density(rho, y, phi);
  const double root_eta = std::sqrt(noise.eta);
  const double sd = noise.noise_sd();
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  // x = sd * s, with the Gaussian factor written as a standard normal in s.
  auto integrand = [&](double s) {
    const double x = (y - sd * s) / root_eta;
    return QuadratureProfile(rho, x)(phi) / root_eta * norm * std::exp(-0.5 * s * s);
  };
  const double value = quad::integrate_or_throw(integrand, -12.0, 12.0, 1e-9, 4);
  return clip_density(rho, value);
}

AngleBoundReport angle_integrated_bound_check(const DensityMatrix& rho, const NoiseModel& noise,
                                              const AngleBoundOptions& options) {
  if (!(options.x_step > 0.0 && options.x_max > 0.0)) throw DomainError("invalid x grid");
  AngleBoundReport report;
  report.min_clean_integrand = std::numeric_limits<double>::infinity();
  report.min_noisy_integrand = std::numeric_limits<double>::infinity();
  const quad::Rule phis = quad::gauss_legendre(0.0, std::numbers::pi, 3);
  const int steps = static_cast<int>(std::ceil(options.x_max / options.x_step));
  for (int i = -steps; i <= steps; ++i) {
    const double x = i * options.x_step;
    const QuadratureProfile profile(rho, x);
    double clean = 0.0;
    double noisy = 0.0;
    for (std::size_t k = 0; k < phis.size(); ++k) {
      const double pc = profile(phis.nodes[k]);
      const double pn = noisy_density(rho, noise, x, phis.nodes[k]);
      report.min_clean_integrand = std::min(report.min_clean_integrand, pc);
      report.min_noisy_integrand = std::min(report.min_noisy_integrand, pn);
      clean += phis.weights[k] * pc;
      noisy += phis.weights[k] * pn;
    }
    report.sup_clean = std::max(report.sup_clean, clean);
    report.sup_noisy = std::max(report.sup_noisy, noisy);
  }
  report.finite = std::isfinite(report.sup_clean) && std::isfinite(report.sup_noisy);
  report.nonnegative =
      report.min_clean_integrand >= -kNegativeRoundOff && report.min_noisy_integrand >= 0.0;
  return report;
}

}  // namespace qht
