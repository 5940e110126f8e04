#include "qht/specfun.hpp"

#include <array>
#include <string>

#include "qht/error.hpp"

namespace qht::specfun {
namespace {

constexpr double kRescaleAbove = 1e150;
constexpr double kRescaleFactor = 1e-150;
const double kLogRescale = 150.0 * std::log(10.0);
const double kLogPi = std::log(std::numbers::pi);

void check_order(int order, int max_order, const char* what) {
  if (order < 0) throw DomainError(std::string(what) + " must be nonnegative");
  if (order > max_order) {
    throw CapacityError(std::string(what) + " = " + std::to_string(order) +
                            " exceeds configured max order " + std::to_string(max_order),
                        order);
  }
}

double signed_exp(double mantissa, double log_factor) {
  if (mantissa == 0.0) return 0.0;
  return std::copysign(std::exp(std::log(std::abs(mantissa)) + log_factor), mantissa);
}

}  // namespace

double log_factorial(int n) {
  constexpr int kTable = 2 * kDefaultMaxOrder + 2;
  static const std::array<double, kTable> table = [] {
    std::array<double, kTable> t{};
    t[0] = 0.0;
    for (int i = 1; i < kTable; ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  if (n < 0) throw DomainError("log_factorial of a negative integer");
  if (n < kTable) return table[n];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

void hermite_fns(double x, std::span<double> out, int max_order) {
  if (out.empty()) return;
  check_order(static_cast<int>(out.size()) - 1, max_order, "Hermite order");
  const double gauss = -0.5 * x * x;
  double prev = 0.0;
  double cur = std::pow(std::numbers::pi, -0.25);
  double log_scale = 0.0;
  out[0] = signed_exp(cur, gauss);
  for (std::size_t k = 0; k + 1 < out.size(); ++k) {
    const double kk = static_cast<double>(k);
    const double next = std::sqrt(2.0 / (kk + 1.0)) * x * cur - std::sqrt(kk / (kk + 1.0)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > kRescaleAbove) {
      cur *= kRescaleFactor;
      prev *= kRescaleFactor;
      log_scale += kLogRescale;
    }
    out[k + 1] = signed_exp(cur, log_scale + gauss);
  }
}

std::vector<double> hermite_fns(int count, double x, int max_order) {
  if (count < 0) throw DomainError("Hermite count must be nonnegative");
  std::vector<double> out(static_cast<std::size_t>(count));
  hermite_fns(x, out, max_order);
  return out;
}

double hermite_fn(int m, double x, int max_order) {
  check_order(m, max_order, "Hermite order");
  std::vector<double> all(static_cast<std::size_t>(m) + 1);
  hermite_fns(x, all, max_order);
  return all.back();
}

Scaled laguerre_scaled(int n, int alpha, double x, int max_order) {
  check_order(n, max_order, "Laguerre degree");
  check_order(alpha, 2 * max_order, "Laguerre order");
  if (n == 0) return {1.0, 0.0};
  const double a = static_cast<double>(alpha);
  double prev = 1.0;
  double cur = 1.0 + a - x;
  double log_scale = 0.0;
  for (int k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    const double next = ((2.0 * kk + 1.0 + a - x) * cur - (kk + a) * prev) / (kk + 1.0);
    prev = cur;
    cur = next;
    if (std::abs(cur) > kRescaleAbove) {
      cur *= kRescaleFactor;
      prev *= kRescaleFactor;
      log_scale += kLogRescale;
    }
  }
  return {cur, log_scale};
}

double laguerre(int n, int alpha, double x, int max_order) {
  return laguerre_scaled(n, alpha, x, max_order).value();
}

std::complex<double> wigner_basis(BasisIndex idx, double q, double p, int max_order) {
  check_order(idx.m, max_order, "Wigner index m");
  check_order(idx.n, max_order, "Wigner index n");
  if (idx.m < idx.n) return wigner_basis({idx.n, idx.m}, q, -p, max_order);

  const int alpha = idx.m - idx.n;
  const double z2 = q * q + p * p;
  const double parity = (idx.m % 2 == 0) ? 1.0 : -1.0;
  if (z2 == 0.0) {
    if (alpha > 0) return {0.0, 0.0};
    return {parity / std::numbers::pi, 0.0};
  }
  const Scaled lag = laguerre_scaled(idx.n, alpha, 2.0 * z2, max_order);
  if (lag.mantissa == 0.0) return {0.0, 0.0};
  const double z = std::sqrt(z2);
  const double log_mag = -kLogPi + 0.5 * (log_factorial(idx.n) - log_factorial(idx.m)) - z2 +
                         alpha * std::log(std::numbers::sqrt2 * z) + lag.log_abs();
  const double sign = parity * (lag.mantissa < 0.0 ? -1.0 : 1.0);
  const double theta = std::atan2(p, -q);  // arg(ip - q)
  return std::polar(sign * std::exp(log_mag), alpha * theta);
}

double wigner_envelope(BasisIndex idx, double z, int max_order) {
  if (!(z >= 0.0)) throw DomainError("wigner_envelope requires z >= 0");
  check_order(idx.m, max_order, "Wigner index m");
  check_order(idx.n, max_order, "Wigner index n");
  const int hi = std::max(idx.m, idx.n);
  const int lo = std::min(idx.m, idx.n);
  const int alpha = hi - lo;
  if (z == 0.0) return alpha > 0 ? 0.0 : 1.0 / std::numbers::pi;
  const Scaled lag = laguerre_scaled(lo, alpha, 2.0 * z * z, max_order);
  if (lag.mantissa == 0.0) return 0.0;
  const double log_l = -kLogPi + 0.5 * alpha * std::log(2.0) +
                       0.5 * (log_factorial(lo) - log_factorial(hi)) - z * z +
                       alpha * std::log(z) + lag.log_abs();
  return std::exp(log_l);
}

std::complex<double> wigner_basis_ft(BasisIndex idx, double u, double v, int max_order) {
  // (-i)^{m+n}
  static constexpr std::complex<double> kPowMinusI[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  const auto phase = kPowMinusI[(idx.m + idx.n) % 4];
  return kFourierConventionFactor * 0.5 * phase * wigner_basis(idx, 0.5 * u, 0.5 * v, max_order);
}

}  // namespace qht::specfun
