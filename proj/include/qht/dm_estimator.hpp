#pragma once

#include <optional>
#include <vector>

#include "qht/pattern.hpp"
#include "qht/sampler.hpp"
#include "qht/state.hpp"

namespace qht {

/// Truncation order N (entries with j + k < N are estimated) and, for
/// eta <= 1/2, the spectral cutoff delta.
struct DmTuning {
  int N = 1;
  std::optional<double> delta;
  /// Real-valued solution before rounding.
  double N_real = 1.0;
  /// Residuals of the defining equations at (N_real, delta).
  std::vector<double> residuals;
};

/// Pattern-function regime implied by the noise level and the tuning.
Regime regime_for(const NoiseModel& noise, const DmTuning& tuning);

/// rho^_{j,k} = (1/n) sum_l f_{j,k}(Y_l / sqrt(eta)) e^{i(j-k) Phi_l} for
/// j + k < N; the remaining entries are zero. The result has dimension N and
/// is flagged raw.
DensityMatrix estimate_dm(const Dataset& data, const DmTuning& tuning, const PatternTable& table);

/// Theory-driven choice of (N, delta) for sample size n >= 3.
DmTuning select_tuning(double n, const NoiseModel& noise, const StateClass& cls);

struct Projection {
  DensityMatrix rho;
  /// Squared Hilbert-Schmidt distance between input and output.
  double distance_sq = 0.0;
};

/// Nearest physical state in Hilbert-Schmidt norm: the eigenvalues are
/// projected onto the probability simplex (shifted by a common constant, then
/// clipped at zero). Throws NumericError when no eigenvalue is positive.
Projection project_physical(const DensityMatrix& raw);

}  // namespace qht
