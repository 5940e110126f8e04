#include "qht/verify.hpp"

#include <cmath>
#include <numbers>

#include "qht/error.hpp"
#include "qht/forward.hpp"
#include "qht/parallel.hpp"
#include "qht/pattern.hpp"
#include "qht/quadrature.hpp"
#include "qht/risk.hpp"
#include "qht/specfun.hpp"

namespace qht {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEnvelopeSlack = 1e-12;
constexpr double kBiorthogonalityTol = 1e-6;

}  // namespace

CheckResult check_envelope_bound(int max_index, double z_step, double envelope_factor) {
  if (max_index < 0 || !(z_step > 0.0)) throw DomainError("invalid envelope check parameters");
  CheckResult out;
  out.name = "envelope_bound";
  const int count = max_index + 1;
  std::vector<double> margins(static_cast<std::size_t>(count * count));
  std::vector<long> violations(margins.size(), 0), points(margins.size(), 0);
  parallel_for(margins.size(), [&](std::size_t idx) {
    const int m = static_cast<int>(idx) / count, n = static_cast<int>(idx) % count;
    const double s = specfun::BasisIndex{m, n}.s();
    const auto steps = static_cast<long>(std::floor(3.0 * s / z_step + 1e-9));
    double margin = std::numeric_limits<double>::infinity();
    for (long i = 0; i <= steps; ++i) {
      const double z = static_cast<double>(i) * z_step;
      const double l = envelope_factor * specfun::wigner_envelope({m, n}, z);
      const double bound = (z <= s ? 1.0 : std::exp(-(z - s) * (z - s))) / kPi;
      const double slack = bound + kEnvelopeSlack - l;
      margin = std::min(margin, slack);
      if (slack < 0.0) ++violations[idx];
    }
    margins[idx] = margin;
    points[idx] = steps + 1;
  });
  long total_violations = 0, total_points = 0;
  out.margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < margins.size(); ++i) {
    total_violations += violations[i];
    total_points += points[i];
    out.margin = std::min(out.margin, margins[i]);
  }
  out.passed = total_violations == 0;
  out.details = {{"max_index", max_index},
                 {"z_step", z_step},
                 {"envelope_factor", envelope_factor},
                 {"points", total_points},
                 {"violations", total_violations}};
  return out;
}

CheckResult check_norm_growth() {
  CheckResult out;
  out.name = "norm_growth";
  const auto clean = norm_growth_report(60, Regime::noiseless());
  std::vector<double> x, y;
  for (int N = 10; N <= 60; ++N) {
    x.push_back(std::log(static_cast<double>(N)));
    y.push_back(std::log(clean[N].sum_l2_sq));
  }
  const RateFit loglog = fit_line(x, y);

  const Regime amp = Regime::amplified(0.8);
  const auto noisy = norm_growth_report(40, amp);
  x.clear();
  y.clear();
  for (int N = 20; N <= 40; ++N) {
    x.push_back(static_cast<double>(N));
    y.push_back(std::log(noisy[N].sum_l2_sq));
  }
  const RateFit exponential = fit_line(x, y);
  const double lo = 2.0, hi = 17.0 / 6.0 + 0.3;
  const double rate_cap = 8.0 * amp.gamma() + 0.05;
  out.margin = std::min({loglog.slope - lo, hi - loglog.slope, rate_cap - exponential.slope});
  out.passed = out.margin >= 0.0;
  out.details = {{"noiseless_loglog_slope", loglog.slope},
                 {"noiseless_bracket", {lo, hi}},
                 {"amplified_eta", 0.8},
                 {"amplified_rate", exponential.slope},
                 {"amplified_rate_cap", rate_cap}};
  return out;
}

CheckResult check_decay() {
  CheckResult out;
  out.name = "decay";
  out.passed = true;
  out.margin = std::numeric_limits<double>::infinity();
  const std::vector<std::tuple<std::string, DensityMatrix, StateClass>> cases = {
      {"fock(0)", make_state(state_kind::Fock{0}, 4), StateClass::make(1.0, 2.0)},
      {"coherent(0.5)", make_state(state_kind::Coherent{{0.5, 0.0}}, 12),
       StateClass::make(0.5, 2.0)}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [id, rho, cls] : cases) {
    const ClassReport membership = class_check(rho, cls);
    const DecayReport r = decay_check(rho, cls);
    const bool ok = membership.member && r.passed && r.violations_direct == 0 &&
                    r.violations_fourier == 0;
    out.passed = out.passed && ok;
    out.margin = std::min({out.margin, 1.0 - r.max_ratio_direct, 1.0 - r.max_ratio_fourier});
    rows.push_back({{"state", id},
                    {"B", cls.B},
                    {"r", cls.r},
                    {"beta", r.beta},
                    {"class_member", membership.member},
                    {"z0_direct", r.z0_direct ? nlohmann::json(*r.z0_direct) : nullptr},
                    {"z0_fourier", r.z0_fourier ? nlohmann::json(*r.z0_fourier) : nullptr},
                    {"max_ratio_direct", r.max_ratio_direct},
                    {"max_ratio_fourier", r.max_ratio_fourier}});
  }
  out.details = {{"cases", rows}};
  return out;
}

CheckResult check_tail_lemma() {
  CheckResult out;
  out.name = "tail_lemma";
  const auto rows = tail_lemma_check(1.0, 0.5, {25.0, 36.0, 49.0});
  out.passed = true;
  out.margin = std::numeric_limits<double>::infinity();
  nlohmann::json list = nlohmann::json::array();
  for (const TailRow& r : rows) {
    out.passed = out.passed && r.holds;
    out.margin = std::min(out.margin, (r.rhs - r.lhs) / r.rhs);
    list.push_back({{"z", r.z}, {"lhs", r.lhs}, {"rhs", r.rhs}});
  }
  out.details = {{"C", 1.0}, {"nu", 0.5}, {"rows", list}};
  return out;
}

double biorthogonality_error(const DensityMatrix& rho, int max_order) {
  if (max_order < 0) throw DomainError("max_order must be >= 0");
  const PatternTable table = build_table(max_order + 1, Regime::noiseless());
  const quad::Rule phis = quad::gauss_legendre(0.0, kPi, 3);
  const std::size_t X = table.nodes();
  const int D = max_order + 1;

  // Angular moments A_d(x) = (1/pi) \int_0^pi p(x, phi) e^{i d phi} dphi.
  std::vector<std::vector<Complex>> moments(X, std::vector<Complex>(D));
  parallel_for(X, [&](std::size_t i) {
    const QuadratureProfile profile(rho, table.node(i));
    for (std::size_t a = 0; a < phis.size(); ++a) {
      const double p = profile(phis.nodes[a]) * phis.weights[a] / kPi;
      for (int d = 0; d < D; ++d) moments[i][d] += p * std::polar(1.0, d * phis.nodes[a]);
    }
  });

  // The integrand decays like a Gaussian well inside the table, so the
  // trapezoid rule on the table nodes is spectrally accurate.
  double worst = 0.0;
  for (int j = 0; j <= max_order; ++j)
    for (int k = 0; j + k <= max_order; ++k) {
      const int d = std::abs(j - k);
      std::vector<Complex> terms(X);
      for (std::size_t i = 0; i < X; ++i) {
        const Complex m = j >= k ? moments[i][d] : std::conj(moments[i][d]);
        terms[i] = table.at(j, k, i) * m * table.dx();
      }
      const Complex value = pairwise_sum(terms);
      const Complex target = j < rho.dim() && k < rho.dim() ? rho(j, k) : Complex(0.0);
      worst = std::max(worst, std::abs(value - target));
    }
  return worst;
}

CheckResult check_biorthogonality() {
  CheckResult out;
  out.name = "biorthogonality";
  out.passed = true;
  out.margin = std::numeric_limits<double>::infinity();
  nlohmann::json rows = nlohmann::json::array();
  const std::vector<std::pair<std::string, DensityMatrix>> states = {
      {"fock(0)", make_state(state_kind::Fock{0}, 8)},
      {"fock(1)", make_state(state_kind::Fock{1}, 8)},
      {"coherent(0.5)", make_state(state_kind::Coherent{{0.5, 0.0}}, 12)}};
  for (const auto& [id, rho] : states) {
    const double err = biorthogonality_error(rho, 6);
    out.passed = out.passed && err < kBiorthogonalityTol;
    out.margin = std::min(out.margin, kBiorthogonalityTol - err);
    rows.push_back({{"state", id}, {"max_abs_error", err}});
  }
  out.details = {{"max_order", 6}, {"tolerance", kBiorthogonalityTol}, {"states", rows}};
  return out;
}

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
  std::vector<CheckResult> results;
  results.push_back(check_envelope_bound(25, 0.01, options.envelope_factor));
  if (options.include_norm_growth) results.push_back(check_norm_growth());
  results.push_back(check_decay());
  results.push_back(check_tail_lemma());
  results.push_back(check_biorthogonality());
  return results;
}

nlohmann::json to_json(const std::vector<CheckResult>& results) {
  nlohmann::json checks = nlohmann::json::array();
  bool all = true;
  for (const CheckResult& r : results) {
    all = all && r.passed;
    checks.push_back(
        {{"name", r.name}, {"passed", r.passed}, {"margin", r.margin}, {"details", r.details}});
  }
  return {{"passed", all}, {"checks", checks}};
}

}  // namespace qht
