#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qht/forward.hpp"

namespace qht {

/// Which Fourier multiplier is applied to the noiseless pattern functions.
///   noiseless        f~(t)
///   amplified(eta)   f~(t) e^{gamma t^2},                 1/2 < eta <= 1
///   cutoff(eta, d)   f~(t) e^{gamma t^2} I(|t| <= 1/d),   0 < eta <= 1/2
class Regime {
 public:
  enum class Kind : std::uint32_t { noiseless = 0, amplified = 1, cutoff = 2 };

  static Regime noiseless();
  static Regime amplified(double eta);
  static Regime cutoff(double eta, double delta);
  /// Picks the regime that matches the noise level. eta = 1/2 belongs to the
  /// cutoff regime, which needs `delta`.
  static Regime for_noise(const NoiseModel& noise, std::optional<double> delta = std::nullopt);

  Kind kind() const { return kind_; }
  double eta() const { return eta_; }
  double delta() const { return delta_; }
  double gamma() const { return (1.0 - eta_) / (4.0 * eta_); }
  std::string describe() const;

  bool operator==(const Regime&) const = default;

 private:
  Regime(Kind kind, double eta, double delta) : kind_(kind), eta_(eta), delta_(delta) {}

  Kind kind_ = Kind::noiseless;
  double eta_ = 1.0;
  double delta_ = 0.0;
};

/// Fourier transform of the noiseless pattern function f_{j,k} (symmetric in
/// j, k). Convention: f(x) = (1/2pi) \int f~(t) e^{ixt} dt.
std::complex<double> pattern_ft(int j, int k, double t);
std::complex<double> pattern_ft(int j, int k, double t, const Regime& regime);

/// Upper end T of the frequency support used for (j, k): 1/delta in the
/// cutoff regime, otherwise the point past which the envelope
/// pi t e^{-(t/2 - s)^2 + gamma t^2} stays below 1e-16.
double pattern_bandwidth(int j, int k, const Regime& regime);

/// f_{j,k}(x) under `regime` by adaptive inverse Fourier quadrature, split
/// at t = 0.
double pattern_eval(int j, int k, double x, const Regime& regime);

/// (1/2pi) \int |f~|^2 dt, i.e. ||f_{j,k}||_2^2 by Parseval.
double pattern_l2_sq(int j, int k, const Regime& regime);

struct TableGrid {
  /// Node spacing; 0 selects the largest spacing whose 4-point
  /// interpolation error bound is below `interp_tol`.
  double dx = 0.0;
  /// Half-width of the x-range; 0 selects 12 + sqrt(N).
  double half_width = 0.0;
  double interp_tol = 1e-7;
};

/// Pattern functions for every j + k < N tabulated on a uniform x-grid.
class PatternTable {
 public:
  static constexpr std::size_t kMaxEntries = 60'000'000;

  int order() const { return order_; }
  const Regime& regime() const { return regime_; }
  double dx() const { return dx_; }
  double half_width() const { return half_width_; }
  double bandwidth() const { return bandwidth_; }
  std::size_t nodes() const { return nodes_; }
  double node(std::size_t i) const { return -half_width_ + static_cast<double>(i) * dx_; }
  bool contains(int j, int k) const { return j >= 0 && k >= 0 && j + k < order_; }

  /// Tabulated value at node i.
  double at(int j, int k, std::size_t i) const;
  /// 4-point Lagrange interpolation; falls back to pattern_eval near or
  /// beyond the table edges.
  double lookup(int j, int k, double x) const;
  /// Interpolated values of every stored pair at x, in slot order.
  void lookup_all(double x, std::span<double> out) const;
  /// Stored pairs (j >= k), in slot order.
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  /// max_i |f_{j,k}(x_i)|
  double grid_sup(int j, int k) const;

  friend PatternTable build_table(int N, const Regime& regime, const TableGrid& grid);
  friend void write_table_cache(const std::filesystem::path& path, const PatternTable& table);
  friend std::optional<PatternTable> read_table_cache(const std::filesystem::path& path, int N,
                                                      const Regime& regime,
                                                      const TableGrid& grid);

 private:
  std::size_t slot(int j, int k) const;

  int order_ = 0;
  Regime regime_ = Regime::noiseless();
  double dx_ = 0.0;
  double half_width_ = 0.0;
  double bandwidth_ = 0.0;
  std::size_t nodes_ = 0;
  TableGrid request_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<int> slot_of_;    // j * order_ + k -> slot, for j >= k
  std::vector<double> values_;  // slot-major, nodes_ values per (j >= k) pair
};

PatternTable build_table(int N, const Regime& regime, const TableGrid& grid = {});

/// Little-endian binary cache. read_table_cache returns nullopt when the
/// file is missing or any stored parameter differs from the request.
void write_table_cache(const std::filesystem::path& path, const PatternTable& table);
std::optional<PatternTable> read_table_cache(const std::filesystem::path& path, int N,
                                             const Regime& regime, const TableGrid& grid = {});
PatternTable load_or_build_table(const std::filesystem::path& cache, int N, const Regime& regime,
                                 const TableGrid& grid = {});

struct NormGrowthRow {
  int N = 0;
  double sum_l2_sq = 0.0;
  double sum_sup_sq = 0.0;
};

/// Cumulative sums over ordered pairs (j, k) with j + k <= N, for
/// N = 0..N_max. The sup norm is taken on a Nyquist-spaced grid.
std::vector<NormGrowthRow> norm_growth_report(int N_max, const Regime& regime);

}  // namespace qht
