#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <filesystem>
#include <span>
#include <vector>

#include "qht/forward.hpp"
#include "qht/sampler.hpp"
#include "qht/state.hpp"

namespace qht {

struct WignerTuning {
  double h = 0.2;
  double s_n = 5.0;
  double residual = 0.0;

  static WignerTuning make(double h, double s_n);
};

/// K_h(u) = (1/4pi) \int_{|t| <= 1/h} e^{-iut} |t| e^{gamma t^2} dt.
double kernel_eval(double u, double h, const NoiseModel& noise);
/// dK_h/du.
double kernel_derivative(double u, double h, const NoiseModel& noise);
/// ||K_h||_2^2 = (1/8pi) \int_{|t| <= 1/h} t^2 e^{2 gamma t^2} dt.
double kernel_l2_sq(double h, const NoiseModel& noise);

/// K_h tabulated on [-u_max, u_max] with step h/40 and evaluated by cubic
/// Hermite interpolation from exact values and derivatives. Arguments
/// outside the table are evaluated directly.
class KernelTable {
 public:
  KernelTable(double h, const NoiseModel& noise, double u_max);

  double operator()(double u) const {
    const double x = (u + u_max_) * inv_step_;
    if (!(x >= 0.0 && x < span_)) return kernel_eval(u, h_, noise_);
    const auto i = static_cast<std::size_t>(x);
    const double* c = &coeff_[4 * i];
    const double f = x - static_cast<double>(i);
    return c[0] + f * (c[1] + f * (c[2] + f * c[3]));
  }
  double h() const { return h_; }
  double u_max() const { return u_max_; }
  double step() const { return step_; }

 private:
  double h_;
  NoiseModel noise_;
  double u_max_;
  double step_;
  double inv_step_;
  double span_ = 0.0;  // number of intervals
  std::size_t intervals_ = 0;
  std::vector<double> coeff_;  // cubic Hermite polynomial per interval, in the local variable
};

struct GridParams {
  /// 0 selects h/2.
  double step = 0.0;
  /// 0 selects s_n.
  double half_width = 0.0;
};

/// Square grid of nodes (-half_width + i step, -half_width + j step),
/// stored row-major with q as the row index.
class WignerGrid {
 public:
  WignerGrid() = default;
  WignerGrid(double half_width, double step, std::size_t count, WignerTuning tuning);

  double half_width() const { return half_width_; }
  double step() const { return step_; }
  std::size_t count() const { return count_; }
  const WignerTuning& tuning() const { return tuning_; }
  double coord(std::size_t i) const { return -half_width_ + static_cast<double>(i) * step_; }
  double& at(std::size_t iq, std::size_t ip) { return values_[iq * count_ + ip]; }
  double at(std::size_t iq, std::size_t ip) const { return values_[iq * count_ + ip]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  bool in_disc(std::size_t iq, std::size_t ip) const;

 private:
  double half_width_ = 0.0;
  double step_ = 0.0;
  std::size_t count_ = 0;
  WignerTuning tuning_;
  std::vector<double> values_;
};

WignerGrid make_wigner_grid(const WignerTuning& tuning, const GridParams& params = {});

/// W^(z) = (1/n) sum_l K_h([z, Phi_l] - Y_l / sqrt(eta)) on grid nodes inside
/// the disc of radius s_n, zero outside.
WignerGrid estimate_wigner(const Dataset& data, const WignerTuning& tuning,
                           const GridParams& params = {});

/// Single-point estimate (no disc truncation applied).
double estimate_wigner_at(const Dataset& data, const WignerTuning& tuning, double q, double p);

/// Exact Fourier transform \iint_{|z| <= s_n} W^(z) e^{-i w.z} dz of the
/// disc-truncated estimate at each frequency w = (w_q, w_p).
std::vector<std::complex<double>> estimate_wigner_ft(const Dataset& data,
                                                     const WignerTuning& tuning,
                                                     std::span<const std::array<double, 2>> w);

/// Bandwidth from the sample size and state class; s_n = 1/h.
WignerTuning select_wigner_tuning(double n, const NoiseModel& noise, const StateClass& cls);

/// `q,p,w` CSV plus JSON sidecar {h, s_n, eta, n, step, half_width}.
void write_wigner_grid(const std::filesystem::path& csv_path, const WignerGrid& grid, double eta,
                       std::size_t n);

}  // namespace qht
