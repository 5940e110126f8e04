#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qht/dm_estimator.hpp"
#include "qht/wigner_estimator.hpp"

namespace qht {

enum class EstimatorKind { dm, wigner };

/// Monte Carlo summary at one sample size. The variance term uses the 1/R
/// (plug-in) normalization, so mise_mean = b1_sq + b2_sq + sigma_sq up to
/// round-off.
struct RiskCell {
  std::size_t n = 0;
  int replications = 0;
  double mise_mean = 0.0;
  double mise_sd = 0.0;
  double b1_sq = 0.0;     // truncation: entries j + k >= N, or W outside the disc
  double b2_sq = 0.0;     // squared bias of the replicate mean
  double sigma_sq = 0.0;  // replicate variance
  nlohmann::json tuning = nlohmann::json::object();
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

enum class RatePredictor {
  log_n,        // log(mise) against log(n)
  tuning_power  // log(mise) against N(n)^{r/2}
};

struct RiskReport {
  EstimatorKind kind = EstimatorKind::dm;
  std::string state_id;
  RatePredictor predictor = RatePredictor::log_n;
  std::vector<RiskCell> cells;
  std::optional<RateFit> rate_fit;
};

struct DmRiskConfig {
  std::size_t n = 1000;
  int replications = 20;
  NoiseModel noise;
  DmTuning tuning;
  std::uint64_t seed = 0;
  std::string state_id;
};

/// Replicate r uses the dataset seed derive_seed(cfg.seed, r).
RiskCell dm_mise(const DensityMatrix& truth, const DmRiskConfig& cfg);

struct WignerRiskConfig {
  std::size_t n = 1000;
  int replications = 20;
  NoiseModel noise;
  WignerTuning tuning;
  GridParams grid;
  std::uint64_t seed = 0;
  std::string state_id;
};

RiskCell wigner_mise(const DensityMatrix& truth, const WignerRiskConfig& cfg);

/// \iint (W^ - W_rho)^2 for a disc-truncated estimate: midpoint rule inside
/// the disc plus the exact remainder ||rho||^2/(2 pi) - \int_D W_rho^2.
double wigner_ise(const WignerGrid& estimate, const DensityMatrix& truth);

struct DecayOptions {
  double z_min = 0.0;
  double z_max = 12.0;
  double z_step = 0.05;
  int angles = 24;
};

struct DecayReport {
  double beta = 0.0;
  /// Smallest scanned z from which the bound holds up to z_max, on the
  /// direct and on the Fourier side.
  std::optional<double> z0_direct;
  std::optional<double> z0_fourier;
  int violations_direct = 0;  // scanned radii where the bound fails
  int violations_fourier = 0;
  double max_ratio_direct = 0.0;   // max |W| / bound beyond z0
  double max_ratio_fourier = 0.0;
  bool passed = false;
};

/// A(z) from the decay propositions for class `cls`.
double decay_prefactor(double z, const StateClass& cls);

/// Scans |W_rho| <= A(z) e^{-beta z^r} and, for the transform normalized as
/// W~/(2 pi), |W~| <= A(z/2) e^{-beta (z/2)^r}. Passes when both bounds hold
/// from some z0 <= z_max / 2 onwards.
DecayReport decay_check(const DensityMatrix& truth, const StateClass& cls,
                        const DecayOptions& options = {});

struct TailRow {
  double z = 0.0;
  double lhs = 0.0;  // sum_{m+n >= z} e^{-C (m+n)^nu}
  double rhs = 0.0;  // (2 / (C nu)) z^{2-nu} e^{-C z^nu}
  bool holds = false;
};

std::vector<TailRow> tail_lemma_check(double C, double nu, const std::vector<double>& zs);

/// Least squares y = slope x + intercept.
RateFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct RateConfig {
  EstimatorKind kind = EstimatorKind::dm;
  std::vector<std::size_t> ns;
  int replications = 20;
  NoiseModel noise;
  StateClass cls;
  RatePredictor predictor = RatePredictor::log_n;
  GridParams grid;  // wigner only
  std::uint64_t seed = 0;
  std::string state_id;
};

/// One cell per n with auto-selected tuning, then a fit of log(mise)
/// against the predictor.
RiskReport rate_curve(const DensityMatrix& truth, const RateConfig& cfg);

nlohmann::json to_json(const RiskReport& report);
void write_risk_report(const std::filesystem::path& json_path,
                       const std::filesystem::path& csv_path, const RiskReport& report);

std::string to_string(EstimatorKind kind);

}  // namespace qht
