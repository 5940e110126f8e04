#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qht/state.hpp"

namespace qht {

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Smallest slack between the bound and the measured quantity; negative
  /// when the check fails.
  double margin = 0.0;
  nlohmann::json details = nlohmann::json::object();
};

struct VerifyOptions {
  /// Multiplies every envelope l_{m,n} before it is compared to its bound.
  /// 1 in normal use; other values exist to show the suite can fail.
  double envelope_factor = 1.0;
  bool include_norm_growth = true;
};

/// l_{m,n}(z) <= (1/pi) min(1, e^{-(z-s)^2}) for m, n <= max_index on
/// z in [0, 3s] with the given step.
CheckResult check_envelope_bound(int max_index = 25, double z_step = 0.01,
                                 double envelope_factor = 1.0);

/// Log-log slope of the noiseless L2 sums over N in [10, 60] and the
/// exponential rate of the eta = 0.8 sums over N in [20, 40].
CheckResult check_norm_growth();

CheckResult check_decay();
CheckResult check_tail_lemma();

/// max |(1/pi) \iint p_rho(x,phi) f_{j,k}(x) e^{i(j-k)phi} dphi dx - rho_{j,k}|
/// over j + k <= max_order.
double biorthogonality_error(const DensityMatrix& rho, int max_order);
CheckResult check_biorthogonality();

std::vector<CheckResult> run_verification(const VerifyOptions& options = {});
nlohmann::json to_json(const std::vector<CheckResult>& results);

}  // namespace qht
