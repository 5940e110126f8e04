#include "qht/dm_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "qht/error.hpp"
#include "qht/parallel.hpp"

namespace qht {
namespace {

constexpr std::size_t kRecordBlock = 2048;
constexpr int kScanSteps = 20000;

// Root of a monotone or sign-changing f on [lo, hi] to full precision.
template <class F>
double bisect_root(F f, double lo, double hi) {
  const auto tol = boost::math::tools::eps_tolerance<double>(52);
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::bisect(f, lo, hi, tol, iters);
  return 0.5 * (a + b);
}

// Largest x in (lo, hi] where f changes sign, scanning down from hi.
// `valid(x)` must hold at a bracket end for it to count.
template <class F, class V>
std::optional<double> scan_down(F f, V valid, double lo, double hi) {
  double x_prev = hi;
  double f_prev = f(hi);
  for (int i = 1; i <= kScanSteps; ++i) {
    const double x = hi - (hi - lo) * i / kScanSteps;
    if (!valid(x)) break;
    const double fx = f(x);
    if (fx == 0.0) return x;
    if ((fx < 0.0) != (f_prev < 0.0)) return bisect_root(f, x, x_prev);
    x_prev = x;
    f_prev = fx;
  }
  return std::nullopt;
}

[[noreturn]] void no_bracket(const std::string& what, double lo, double hi) {
  std::ostringstream msg;
  msg << "tuning: no root of " << what << " found scanning [" << lo << ", " << hi << "]";
  throw NumericError(msg.str());
}

DmTuning finish(double N_real, std::optional<double> delta, std::vector<double> residuals) {
  DmTuning t;
  t.N_real = N_real;
  t.N = std::max(1, static_cast<int>(std::floor(N_real)));
  t.delta = delta;
  t.residuals = std::move(residuals);
  return t;
}

// 0 < r < 2, eta <= 1/2. With a = 1/delta, the difference of the two
// equations gives 2 gamma a^2 + 2 B N^{r/2} = L - LL^2, so N is a function
// of a and the first equation becomes one-dimensional.
DmTuning solve_cutoff_fractional(double L, double gamma, const StateClass& cls) {
  const double LL2 = std::pow(std::log(L), 2);
  const double budget = L - LL2;
  if (!(budget > 0.0)) {
    throw DomainError("n too small: log n must exceed (log log n)^2 for eta <= 1/2");
  }
  const double B = cls.B, r = cls.r, beta = cls.beta;
  auto N_of = [&](double a) {
    const double v = (budget - 2.0 * gamma * a * a) / (2.0 * B);
    return std::pow(std::max(v, 0.0), 2.0 / r);
  };
  auto common = [&](double a, double N) {
    const double gap = a - 2.0 * std::sqrt(N);
    return 2.0 * beta / std::pow(2.0 / a, r) + 0.5 * gap * gap;
  };
  auto eq1 = [&](double a) { return common(a, N_of(a)) + 2.0 * gamma * a * a - L; };
  const double a_max = std::sqrt(budget / (2.0 * gamma));
  const auto a = scan_down(
      eq1, [&](double x) { return x > 2.0 * std::sqrt(N_of(x)); }, 0.0, a_max);
  if (!a) no_bracket("the cutoff system in 1/delta", 0.0, a_max);
  const double N = N_of(*a);
  const double r1 = common(*a, N) + 2.0 * gamma * *a * *a - L;
  const double r2 = common(*a, N) - 2.0 * B * std::pow(N, r / 2.0) - LL2;
  return finish(N, 1.0 / *a, {r1, r2});
}

// r = 2, eta <= 1/2. The difference of the two equations gives
// 2 gamma a^2 + 2 B N + (4/3) log N = L, so a is a function of N and the
// second equation becomes one-dimensional.
DmTuning solve_cutoff_gaussian(double L, double gamma, const StateClass& cls) {
  const double B = cls.B, beta = cls.beta;
  auto lhs_diff = [&](double N) { return 2.0 * B * N + (4.0 / 3.0) * std::log(N); };
  // lhs_diff is increasing; its root in N is where a reaches 0.
  double hi = 1.0;
  while (lhs_diff(hi) < L) hi *= 2.0;
  const double N_max = bisect_root([&](double N) { return lhs_diff(N) - L; }, 1e-300, hi);
  auto a_of = [&](double N) {
    return std::sqrt(std::max(0.0, (L - lhs_diff(N)) / (2.0 * gamma)));
  };
  auto eq2 = [&](double N) {
    const double a = a_of(N);
    const double gap = a - 2.0 * std::sqrt(N);
    return beta * a * a / 2.0 + 0.5 * gap * gap - 2.0 * B * N - 3.0 * std::log(N);
  };
  const auto N = scan_down(
      eq2, [&](double x) { return x > 0.0; }, N_max * 1e-6, N_max);
  if (!N) no_bracket("the cutoff system in N", N_max * 1e-6, N_max);
  const double a = a_of(*N);
  const double gap = a - 2.0 * std::sqrt(*N);
  const double r1 =
      (beta + 4.0 * gamma) * a * a / 2.0 + 0.5 * gap * gap - (5.0 / 3.0) * std::log(*N) - L;
  const double r2 = beta * a * a / 2.0 + 0.5 * gap * gap - 2.0 * B * *N - 3.0 * std::log(*N);
  if (!(a > 2.0 * std::sqrt(*N))) {
    throw NumericError("tuning: cutoff solution violates 1/delta > 2 sqrt(N)");
  }
  return finish(*N, 1.0 / a, {r1, r2});
}

}  // namespace

Regime regime_for(const NoiseModel& noise, const DmTuning& tuning) {
  return Regime::for_noise(noise, tuning.delta);
}

DensityMatrix estimate_dm(const Dataset& data, const DmTuning& tuning, const PatternTable& table) {
  if (data.records.empty()) throw DomainError("cannot estimate from an empty dataset");
  if (tuning.N < 1) throw DomainError("tuning N must be >= 1");
  const NoiseModel noise = NoiseModel::make(data.eta);
  const Regime regime = regime_for(noise, tuning);
  if (!(regime == table.regime())) {
    throw DomainError("pattern table regime " + table.regime().describe() +
                      " does not match the data regime " + regime.describe());
  }
  if (tuning.N > table.order()) {
    throw DomainError("tuning N = " + std::to_string(tuning.N) + " exceeds the table order " +
                      std::to_string(table.order()));
  }

  const auto& pairs = table.pairs();
  std::vector<std::size_t> used;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (pairs[p].first + pairs[p].second < tuning.N) used.push_back(p);
  }
  const std::size_t U = used.size();
  const std::size_t n = data.records.size();
  const double inv_root_eta = 1.0 / std::sqrt(data.eta);

  const std::size_t blocks = (n + kRecordBlock - 1) / kRecordBlock;
  std::vector<std::vector<Complex>> partial(blocks, std::vector<Complex>(U));
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> values(pairs.size());
    std::vector<Complex>& acc = partial[b];
    const std::size_t end = std::min(n, (b + 1) * kRecordBlock);
    for (std::size_t l = b * kRecordBlock; l < end; ++l) {
      const Record& rec = data.records[l];
      table.lookup_all(rec.y * inv_root_eta, values);
      for (std::size_t u = 0; u < U; ++u) {
        const auto [j, k] = pairs[used[u]];
        acc[u] += values[used[u]] * std::polar(1.0, (j - k) * rec.phi);
      }
    }
  });

  ComplexMatrix m = ComplexMatrix::Zero(tuning.N, tuning.N);
  std::vector<Complex> column(blocks);
  for (std::size_t u = 0; u < U; ++u) {
    for (std::size_t b = 0; b < blocks; ++b) column[b] = partial[b][u];
    const Complex mean = pairwise_sum(column) / static_cast<double>(n);
    const auto [j, k] = pairs[used[u]];
    m(j, k) = mean;
    m(k, j) = std::conj(mean);
    if (j == k) m(j, j) = Complex(mean.real(), 0.0);
  }
  return DensityMatrix(std::move(m), true);
}

DmTuning select_tuning(double n, const NoiseModel& noise, const StateClass& cls) {
  if (!(n >= 3.0) || !std::isfinite(n)) throw DomainError("select_tuning needs n >= 3");
  if (!(noise.eta > 0.0 && noise.eta <= 1.0)) throw DomainError("eta must lie in (0, 1]");
  if (!(cls.B > 0.0 && cls.r > 0.0 && cls.r <= 2.0)) throw DomainError("invalid state class");
  const double L = std::log(n);
  const double B = cls.B, r = cls.r;

  if (noise.eta == 1.0) {
    const double N = std::pow(L / (2.0 * B), 2.0 / r);
    return finish(N, std::nullopt, {2.0 * B * std::pow(N, r / 2.0) - L});
  }
  const double gamma = noise.gamma();
  if (noise.eta > 0.5) {
    if (r == 2.0) {
      const double N = L / (2.0 * (4.0 * gamma + B)) * (1.0 + (2.0 / 3.0) * std::log(L) / L);
      return finish(N, std::nullopt, {});
    }
    auto f = [&](double N) { return 8.0 * gamma * N + 2.0 * B * std::pow(N, r / 2.0) - L; };
    const double hi = L / (8.0 * gamma);
    if (!(f(hi) >= 0.0)) no_bracket("8 gamma N + 2 B N^{r/2} = log n", 0.0, hi);
    const double N = bisect_root(f, 0.0, hi);
    return finish(N, std::nullopt, {f(N)});
  }
  return r == 2.0 ? solve_cutoff_gaussian(L, gamma, cls) : solve_cutoff_fractional(L, gamma, cls);
}

Projection project_physical(const DensityMatrix& raw) {
  const ComplexMatrix& m = raw.entries();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m);
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const Eigen::VectorXd mu = solver.eigenvalues();
  if (!(mu.maxCoeff() > 0.0)) {
    throw NumericError("cannot project: the matrix has no positive spectrum to normalize");
  }
  // Euclidean projection of the spectrum onto the probability simplex.
  std::vector<double> u(mu.data(), mu.data() + mu.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, shift = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumulative += u[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) shift = t;
  }
  const Eigen::VectorXd lambda = (mu.array() - shift).cwiseMax(0.0).matrix();
  const ComplexMatrix& V = solver.eigenvectors();
  ComplexMatrix out = V * lambda.cast<Complex>().asDiagonal() * V.adjoint();
  Projection p{DensityMatrix(out, false, raw.state_class()), 0.0};
  p.distance_sq = (p.rho.entries() - m).squaredNorm();
  return p;
}

}  // namespace qht
