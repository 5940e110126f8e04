#pragma once

#include <complex>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace qht {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

/// Decay class R(B, r): |rho_{m,n}| <= exp(-B (m+n)^{r/2}).
struct StateClass {
  double B = 1.0;
  double r = 2.0;
  /// Wigner-side decay rate. B/(1+sqrt B)^2 when r == 2, otherwise a
  /// user-chosen value below B (default 0.9 B).
  double beta = 0.25;

  static constexpr double kDefaultBetaFraction = 0.9;

  static StateClass make(double B, double r, std::optional<double> beta = std::nullopt);
  double bound(int m, int n) const;
};

struct PhysicalReport {
  bool hermitian = true;
  double trace_deficit = 0.0;
  double min_eigenvalue = 0.0;
  bool physical = true;
};

/// Truncated density matrix in the Fock basis. Hermiticity is enforced on
/// construction: asymmetry beyond rounding level throws, otherwise the upper
/// triangle is authoritative and the lower triangle is its exact conjugate.
class DensityMatrix {
 public:
  static constexpr double kTraceTolerance = 1e-6;
  static constexpr double kEigenTolerance = 1e-10;

  DensityMatrix() = default;

  /// `raw` marks unconstrained estimates (no trace or positivity check).
  /// Non-raw matrices must satisfy the physical invariants or DomainError
  /// is thrown.
  explicit DensityMatrix(ComplexMatrix entries, bool raw = false,
                         std::optional<StateClass> cls = std::nullopt);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const ComplexMatrix& entries() const { return entries_; }
  Complex operator()(int m, int n) const { return entries_(m, n); }
  bool raw() const { return raw_; }
  const std::optional<StateClass>& state_class() const { return class_; }
  void set_state_class(std::optional<StateClass> cls) { class_ = cls; }

  /// 1 - Re tr(rho).
  double trace_deficit() const;
  Eigen::VectorXd eigenvalues() const;
  PhysicalReport check_physical() const;

  /// Copy padded with zeros (or truncated) to `dim`.
  DensityMatrix resized(int dim) const;

 private:
  ComplexMatrix entries_;
  bool raw_ = false;
  std::optional<StateClass> class_;
};

namespace state_kind {
struct Fock {
  int k = 0;
};
struct Coherent {
  Complex alpha{0.0, 0.0};
};
struct Thermal {
  double mean_photons = 0.0;
};
struct Mixture {
  std::vector<std::pair<double, DensityMatrix>> parts;
};
}  // namespace state_kind

using StateKind =
    std::variant<state_kind::Fock, state_kind::Coherent, state_kind::Thermal, state_kind::Mixture>;

/// Builds a truncated test state. Throws CapacityError (carrying the
/// smallest adequate dimension) when the truncation would lose 1e-6 or more
/// of the trace.
DensityMatrix make_state(const StateKind& kind, int dim);

/// Human-readable identifier such as "fock(1)" or "coherent(0.5+0i)".
std::string describe(const StateKind& kind);

/// The states used throughout the test and benchmark suites:
/// fock(0), fock(1), coherent(0.5), thermal(0.1).
std::vector<std::pair<std::string, DensityMatrix>> canonical_states(int dim);

struct ClassReport {
  bool member = true;
  std::pair<int, int> worst_cell{0, 0};
  double margin = 0.0;  // min over cells of bound - |rho_{m,n}|
};

ClassReport class_check(const DensityMatrix& rho, const StateClass& cls);

double hs_norm_sq(const DensityMatrix& rho);
double dm_distance_sq(const DensityMatrix& a, const DensityMatrix& b);

// State files: {dim, entries: row-major [re, im] pairs, class: {B, r}}.
nlohmann::json to_json(const DensityMatrix& rho);
DensityMatrix density_matrix_from_json(const nlohmann::json& j);
void write_state_file(const std::filesystem::path& path, const DensityMatrix& rho,
                      const nlohmann::json& extra = nlohmann::json::object());
DensityMatrix read_state_file(const std::filesystem::path& path);

}  // namespace qht
