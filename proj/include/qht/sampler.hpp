#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qht/forward.hpp"
#include "qht/rng.hpp"
#include "qht/state.hpp"

namespace qht {

struct Record {
  double y = 0.0;
  double phi = 0.0;
};

/// Noisy homodyne observations (Y_l, Phi_l) with their generating metadata.
struct Dataset {
  std::vector<Record> records;
  double eta = 1.0;
  std::uint64_t seed = 0;
  std::string source_state_id;
  /// Pre-noise quadratures X_l; only filled when requested (debug mode).
  std::vector<double> latent;

  std::size_t size() const { return records.size(); }
};

/// Rejection sampler for X | Phi = phi with a scaled Gaussian envelope
/// c * N(0, sigma^2). sigma^2 = max(1, largest conditional second moment);
/// c is the grid maximum of p_rho / N(0, sigma^2) over (x, phi) plus a 10%
/// margin.
class QuadratureSampler {
 public:
  static constexpr double kMinAcceptance = 1e-3;
  static constexpr double kSafetyMargin = 1.1;

  QuadratureSampler(const DensityMatrix& rho, std::string state_id = "");

  double draw(double phi, rng::Stream& stream) const;

  double envelope_constant() const { return c_; }
  double envelope_sd() const { return sigma_; }
  /// Expected acceptance probability, 1 / c.
  double acceptance_rate() const { return 1.0 / c_; }

 private:
  double envelope(double x) const;

  DensityMatrix rho_;
  std::string state_id_;
  double sigma_ = 1.0;
  double c_ = 1.0;
};

struct SampleOptions {
  bool keep_latent = false;
};

/// Draws n i.i.d. records. Phi ~ U[0, pi], X | Phi by rejection, then
/// Y = sqrt(eta) X + sqrt((1-eta)/2) xi. Record l uses its own Philox
/// streams, so the output is identical for any thread count.
Dataset sample(const DensityMatrix& rho, const NoiseModel& noise, std::size_t n,
               std::uint64_t seed, const std::string& source_state_id = "",
               const SampleOptions& options = {});

/// Writes `y,phi` CSV (17 significant digits) plus a JSON sidecar with the
/// same stem: {eta, seed, n, source_state_id}.
void write_dataset(const std::filesystem::path& csv_path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& csv_path);
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

}  // namespace qht
