#include "qht/state.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "qht/error.hpp"

namespace qht {
namespace {

constexpr double kHermitianTolerance = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dim(int dim) {
  if (dim <= 0) throw DomainError("dim must be a positive integer, got " + std::to_string(dim));
}

void require_trace(double deficit, int dim, int required, const std::string& name) {
  if (!(deficit < DensityMatrix::kTraceTolerance)) {
    std::ostringstream msg;
    msg << name << " truncated at dim " << dim << " loses " << deficit
        << " of its trace; need dim >= " << required;
    throw CapacityError(msg.str(), required);
  }
}

std::string format_number(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

StateClass StateClass::make(double B, double r, std::optional<double> beta) {
  if (!(B > 0.0)) throw DomainError("class parameter B must be positive");
  if (!(r > 0.0 && r <= 2.0)) throw DomainError("class parameter r must lie in (0, 2]");
  StateClass cls;
  cls.B = B;
  cls.r = r;
  if (r == 2.0) {
    const double exact = B / ((1.0 + std::sqrt(B)) * (1.0 + std::sqrt(B)));
    if (beta && *beta != exact) {
      throw DomainError("for r = 2 beta is fixed to B/(1+sqrt(B))^2");
    }
    cls.beta = exact;
  } else {
    cls.beta = beta.value_or(kDefaultBetaFraction * B);
    if (!(cls.beta > 0.0 && cls.beta < B)) throw DomainError("beta must lie in (0, B)");
  }
  return cls;
}

double StateClass::bound(int m, int n) const {
  return std::exp(-B * std::pow(static_cast<double>(m + n), 0.5 * r));
}

DensityMatrix::DensityMatrix(ComplexMatrix entries, bool raw, std::optional<StateClass> cls)
    : entries_(std::move(entries)), raw_(raw), class_(cls) {
  if (entries_.rows() != entries_.cols()) throw DomainError("density matrix must be square");
  check_dim(static_cast<int>(entries_.rows()));
  const int d = dim();
  double scale = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) scale = std::max(scale, std::abs(entries_(i, j)));
  const double tol = kHermitianTolerance * std::max(1.0, scale);
  for (int i = 0; i < d; ++i) {
    if (std::abs(entries_(i, i).imag()) > tol) throw DomainError("diagonal entries must be real");
    entries_(i, i) = Complex(entries_(i, i).real(), 0.0);
    for (int j = i + 1; j < d; ++j) {
      if (std::abs(entries_(i, j) - std::conj(entries_(j, i))) > tol) {
        throw DomainError("density matrix is not Hermitian");
      }
      entries_(j, i) = std::conj(entries_(i, j));
    }
  }
  if (!raw_) {
    const PhysicalReport report = check_physical();
    if (!report.physical) {
      std::ostringstream msg;
      msg << "density matrix violates physical invariants (trace deficit "
          << report.trace_deficit << ", min eigenvalue " << report.min_eigenvalue << ")";
      throw DomainError(msg.str());
    }
  }
}

double DensityMatrix::trace_deficit() const { return 1.0 - entries_.trace().real(); }

Eigen::VectorXd DensityMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(entries_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

PhysicalReport DensityMatrix::check_physical() const {
  PhysicalReport r;
  r.trace_deficit = trace_deficit();
  r.min_eigenvalue = eigenvalues().minCoeff();
  r.physical = r.trace_deficit <= kTraceTolerance && r.trace_deficit >= -1e-12 &&
               r.min_eigenvalue >= -kEigenTolerance;
  return r;
}

DensityMatrix DensityMatrix::resized(int new_dim) const {
  check_dim(new_dim);
  ComplexMatrix m = ComplexMatrix::Zero(new_dim, new_dim);
  const int k = std::min(new_dim, dim());
  m.topLeftCorner(k, k) = entries_.topLeftCorner(k, k);
  // Truncation may lose trace, so the copy is only checked when padding.
  return DensityMatrix(std::move(m), raw_ || new_dim < dim(), class_);
}

DensityMatrix make_state(const StateKind& kind, int dim) {
  check_dim(dim);
  return std::visit(
      Overloaded{
          [&](const state_kind::Fock& f) {
            if (f.k < 0) throw DomainError("fock index must be nonnegative");
            if (dim <= f.k) {
              throw CapacityError("fock(" + std::to_string(f.k) + ") needs dim >= " +
                                      std::to_string(f.k + 1),
                                  f.k + 1);
            }
            ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
            m(f.k, f.k) = 1.0;
            return DensityMatrix(std::move(m));
          },
          [&](const state_kind::Coherent& c) {
            const double mean = std::norm(c.alpha);
            // amplitudes c_m = e^{-|a|^2/2} a^m / sqrt(m!)
            Eigen::VectorXcd amp(dim);
            amp(0) = std::exp(-0.5 * mean);
            for (int m = 1; m < dim; ++m) amp(m) = amp(m - 1) * c.alpha / std::sqrt(double(m));
            const double kept = amp.squaredNorm();
            double deficit = 1.0 - kept;
            if (!(deficit < DensityMatrix::kTraceTolerance)) {
              int required = dim;
              Complex a = amp(dim - 1);
              double tail = deficit;
              while (!(tail < DensityMatrix::kTraceTolerance)) {
                a *= c.alpha / std::sqrt(double(required));
                tail -= std::norm(a);
                ++required;
              }
              require_trace(deficit, dim, required, describe(kind));
            }
            return DensityMatrix(amp * amp.adjoint());
          },
          [&](const state_kind::Thermal& t) {
            if (!(t.mean_photons >= 0.0)) throw DomainError("mean photon number must be >= 0");
            const double q = t.mean_photons / (1.0 + t.mean_photons);
            ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
            double p = 1.0 / (1.0 + t.mean_photons);
            for (int k = 0; k < dim; ++k, p *= q) m(k, k) = p;
            const double deficit = std::pow(q, dim);
            if (!(deficit < DensityMatrix::kTraceTolerance)) {
              const int required = static_cast<int>(
                  std::floor(std::log(DensityMatrix::kTraceTolerance) / std::log(q))) + 1;
              require_trace(deficit, dim, required, describe(kind));
            }
            return DensityMatrix(std::move(m));
          },
          [&](const state_kind::Mixture& mix) {
            if (mix.parts.empty()) throw DomainError("mixture needs at least one component");
            double total = 0.0;
            ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
            for (const auto& [w, part] : mix.parts) {
              if (!(w >= 0.0)) throw DomainError("mixture weights must be nonnegative");
              if (part.dim() > dim) {
                throw CapacityError("mixture component larger than dim", part.dim());
              }
              total += w;
              m.topLeftCorner(part.dim(), part.dim()) += w * part.entries();
            }
            if (std::abs(total - 1.0) > 1e-12) throw DomainError("mixture weights must sum to 1");
            return DensityMatrix(std::move(m));
          },
      },
      kind);
}

std::string describe(const StateKind& kind) {
  return std::visit(
      Overloaded{
          [](const state_kind::Fock& f) { return "fock(" + std::to_string(f.k) + ")"; },
          [](const state_kind::Coherent& c) {
            return "coherent(" + format_number(c.alpha.real()) + (c.alpha.imag() < 0 ? "" : "+") +
                   format_number(c.alpha.imag()) + "i)";
          },
          [](const state_kind::Thermal& t) {
            return "thermal(" + format_number(t.mean_photons) + ")";
          },
          [](const state_kind::Mixture& m) {
            return "mixture(" + std::to_string(m.parts.size()) + ")";
          },
      },
      kind);
}

std::vector<std::pair<std::string, DensityMatrix>> canonical_states(int dim) {
  std::vector<std::pair<std::string, DensityMatrix>> out;
  const StateKind kinds[] = {state_kind::Fock{0}, state_kind::Fock{1},
                             state_kind::Coherent{{0.5, 0.0}}, state_kind::Thermal{0.1}};
  for (const auto& k : kinds) out.emplace_back(describe(k), make_state(k, dim));
  return out;
}

ClassReport class_check(const DensityMatrix& rho, const StateClass& cls) {
  ClassReport report;
  report.margin = std::numeric_limits<double>::infinity();
  for (int m = 0; m < rho.dim(); ++m) {
    for (int n = 0; n < rho.dim(); ++n) {
      const double margin = cls.bound(m, n) - std::abs(rho(m, n));
      if (margin < report.margin) {
        report.margin = margin;
        report.worst_cell = {m, n};
      }
    }
  }
  report.member = report.margin >= 0.0;
  return report;
}

double hs_norm_sq(const DensityMatrix& rho) { return rho.entries().squaredNorm(); }

double dm_distance_sq(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) {
    throw DomainError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                      std::to_string(b.dim()));
  }
  return (a.entries() - b.entries()).squaredNorm();
}

nlohmann::json to_json(const DensityMatrix& rho) {
  nlohmann::json j;
  j["dim"] = rho.dim();
  nlohmann::json entries = nlohmann::json::array();
  for (int m = 0; m < rho.dim(); ++m)
    for (int n = 0; n < rho.dim(); ++n)
      entries.push_back({rho(m, n).real(), rho(m, n).imag()});
  j["entries"] = std::move(entries);
  if (rho.state_class()) j["class"] = {{"B", rho.state_class()->B}, {"r", rho.state_class()->r}};
  if (rho.raw()) j["raw"] = true;
  return j;
}

DensityMatrix density_matrix_from_json(const nlohmann::json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    check_dim(dim);
    const auto& entries = j.at("entries");
    if (entries.size() != static_cast<std::size_t>(dim) * dim) {
      throw IoError("state file: expected " + std::to_string(dim * dim) + " entries");
    }
    ComplexMatrix m(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) {
        const auto& e = entries.at(static_cast<std::size_t>(r) * dim + c);
        m(r, c) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
      }
    std::optional<StateClass> cls;
    if (j.contains("class")) {
      cls = StateClass::make(j["class"].at("B").get<double>(), j["class"].at("r").get<double>());
    }
    return DensityMatrix(std::move(m), j.value("raw", false), cls);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed state JSON: ") + e.what());
  }
}

void write_state_file(const std::filesystem::path& path, const DensityMatrix& rho,
                      const nlohmann::json& extra) {
  nlohmann::json j = to_json(rho);
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

DensityMatrix read_state_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read state file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed state file " + path.string() + ": " + e.what());
  }
  return density_matrix_from_json(j);
}

}  // namespace qht
