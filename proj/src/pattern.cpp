#include "qht/pattern.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "qht/error.hpp"
#include "qht/parallel.hpp"
#include "qht/quadrature.hpp"
#include "qht/specfun.hpp"

namespace qht {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLogEnvelopeFloor = -36.841361487904734;  // log(1e-16)
constexpr double kImagResidual = 1e-9;
constexpr double kPhasePerPanel = 8.0;
// max |prod (u - u_i)| / 4! for the centred 4-point stencil with unit spacing
constexpr double kLagrangeConstant = (9.0 / 16.0) / 24.0;
constexpr std::size_t kRowBlock = 128;

constexpr char kCacheMagic[8] = {'Q', 'H', 'T', 'P', 'A', 'T', 'v', '1'};
constexpr std::uint32_t kCacheVersion = 1;

std::complex<double> minus_i_pow(int d) {
  switch (d % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, -1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, 1.0};
  }
}

int panels_for(double length, double max_frequency) {
  return std::max(1, static_cast<int>(std::ceil(length * max_frequency / kPhasePerPanel)));
}

// Log of the multiplier applied on top of the noiseless transform, or
// -infinity where the cutoff removes the frequency.
double log_multiplier(double t, const Regime& regime) {
  switch (regime.kind()) {
    case Regime::Kind::noiseless: return 0.0;
    case Regime::Kind::amplified: return regime.gamma() * t * t;
    case Regime::Kind::cutoff:
      if (std::abs(t) > 1.0 / regime.delta()) return -std::numeric_limits<double>::infinity();
      return regime.gamma() * t * t;
  }
  return 0.0;
}

std::complex<double> pattern_ft_log(int j, int k, double t, double extra_log) {
  if (j < k) std::swap(j, k);
  if (t == 0.0 || std::isinf(extra_log)) return {0.0, 0.0};
  const int d = j - k;
  const specfun::Scaled lag = specfun::laguerre_scaled(k, d, 0.5 * t * t);
  if (lag.mantissa == 0.0) return {0.0, 0.0};
  const double log_mag =
      0.5 * (specfun::log_factorial(k) - specfun::log_factorial(j) - d * std::numbers::ln2) +
      (1.0 + d) * std::log(std::abs(t)) - 0.25 * t * t + lag.log_scale +
      std::log(std::abs(lag.mantissa)) + extra_log;
  double sign = lag.mantissa < 0.0 ? -1.0 : 1.0;
  if (t < 0.0 && d % 2 == 1) sign = -sign;
  return kPi * sign * std::exp(log_mag) * minus_i_pow(d);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

bool get_u32(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return true;
}

bool get_u64(std::istream& in, std::uint64_t& v) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

bool get_f64(std::istream& in, double& v) {
  std::uint64_t u = 0;
  if (!get_u64(in, u)) return false;
  v = std::bit_cast<double>(u);
  return true;
}

}  // namespace

Regime Regime::noiseless() { return Regime(Kind::noiseless, 1.0, 0.0); }

Regime Regime::amplified(double eta) {
  if (!(eta > 0.5 && eta <= 1.0)) {
    throw DomainError("amplified pattern functions need 1/2 < eta <= 1 (gamma < 1/4)");
  }
  return Regime(Kind::amplified, eta, 0.0);
}

Regime Regime::cutoff(double eta, double delta) {
  if (!(eta > 0.0 && eta <= 0.5)) throw DomainError("cutoff regime needs 0 < eta <= 1/2");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("cutoff delta must be > 0");
  return Regime(Kind::cutoff, eta, delta);
}

Regime Regime::for_noise(const NoiseModel& noise, std::optional<double> delta) {
  if (!(noise.eta > 0.0 && noise.eta <= 1.0)) throw DomainError("eta must lie in (0, 1]");
  if (noise.eta == 1.0) return noiseless();
  if (noise.eta > 0.5) return amplified(noise.eta);
  if (!delta) throw DomainError("eta <= 1/2 requires a cutoff delta");
  return cutoff(noise.eta, *delta);
}

std::string Regime::describe() const {
  std::ostringstream out;
  out.precision(17);
  switch (kind_) {
    case Kind::noiseless: out << "noiseless"; break;
    case Kind::amplified: out << "amplified(eta=" << eta_ << ")"; break;
    case Kind::cutoff: out << "cutoff(eta=" << eta_ << ", delta=" << delta_ << ")"; break;
  }
  return out.str();
}

std::complex<double> pattern_ft(int j, int k, double t) { return pattern_ft_log(j, k, t, 0.0); }

std::complex<double> pattern_ft(int j, int k, double t, const Regime& regime) {
  return pattern_ft_log(j, k, t, log_multiplier(t, regime));
}

double pattern_bandwidth(int j, int k, const Regime& regime) {
  if (j < 0 || k < 0) throw DomainError("pattern indices must be nonnegative");
  if (regime.kind() == Regime::Kind::cutoff) return 1.0 / regime.delta();
  const double s = std::sqrt(static_cast<double>(j + k + 1));
  const double gamma = regime.kind() == Regime::Kind::noiseless ? 0.0 : regime.gamma();
  auto log_env = [&](double t) {
    const double a = 0.5 * t - s;
    return std::log(kPi * t) - a * a + gamma * t * t;
  };
  // Past t = 2s the exponent is concave, so the first crossing is final.
  double t = 2.0 * s;
  while (log_env(t) >= kLogEnvelopeFloor) t += 0.25;
  return t;
}

double pattern_eval(int j, int k, double x, const Regime& regime) {
  if (j < 0 || k < 0) throw DomainError("pattern indices must be nonnegative");
  const double T = pattern_bandwidth(j, k, regime);
  const double s = std::sqrt(static_cast<double>(j + k + 1));
  auto integrand = [&](double t) {
    return pattern_ft(j, k, t, regime) * std::polar(1.0, x * t);
  };
  const int start = panels_for(T, std::abs(x) + s);
  const auto pos = quad::integrate(integrand, 0.0, T, 1e-10, start);
  const auto neg = quad::integrate(integrand, -T, 0.0, 1e-10, start);
  if (!pos.converged || !neg.converged) {
    throw NumericError("pattern function quadrature did not converge at (" + std::to_string(j) +
                       "," + std::to_string(k) + ")");
  }
  const std::complex<double> value = (pos.value + neg.value) / (2.0 * kPi);
  const double scale = std::max(1.0, (pos.l1 + neg.l1) / (2.0 * kPi));
  if (std::abs(value.imag()) > kImagResidual * scale) {
    throw NumericError("pattern function has a non-negligible imaginary part");
  }
  return value.real();
}

double pattern_l2_sq(int j, int k, const Regime& regime) {
  const double T = pattern_bandwidth(j, k, regime);
  auto integrand = [&](double t) { return std::norm(pattern_ft(j, k, t, regime)); };
  const int start = panels_for(T, 2.0 * std::sqrt(static_cast<double>(j + k + 1)));
  return quad::integrate_or_throw(integrand, 0.0, T, 1e-10, start) / kPi;
}

std::size_t PatternTable::slot(int j, int k) const {
  if (j < k) std::swap(j, k);
  if (!contains(j, k)) {
    throw DomainError("pattern table of order " + std::to_string(order_) + " has no entry (" +
                      std::to_string(j) + "," + std::to_string(k) + ")");
  }
  return static_cast<std::size_t>(slot_of_[static_cast<std::size_t>(j) * order_ + k]);
}

double PatternTable::at(int j, int k, std::size_t i) const {
  if (i >= nodes_) throw DomainError("pattern table node index out of range");
  return values_[slot(j, k) * nodes_ + i];
}

double PatternTable::lookup(int j, int k, double x) const {
  const std::size_t sl = slot(j, k);
  const double u = (x + half_width_) / dx_;
  const double fl = std::floor(u);
  if (!(fl >= 1.0 && fl + 2.0 <= static_cast<double>(nodes_ - 1))) {
    return pattern_eval(j, k, x, regime_);
  }
  const auto i = static_cast<std::size_t>(fl);
  const double f = u - fl;
  const double* v = &values_[sl * nodes_ + i - 1];
  return -f * (f - 1.0) * (f - 2.0) / 6.0 * v[0] + (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0 * v[1] -
         (f + 1.0) * f * (f - 2.0) / 2.0 * v[2] + (f + 1.0) * f * (f - 1.0) / 6.0 * v[3];
}

void PatternTable::lookup_all(double x, std::span<double> out) const {
  if (out.size() != pairs_.size()) throw DomainError("lookup_all output has the wrong size");
  const double u = (x + half_width_) / dx_;
  const double fl = std::floor(u);
  if (!(fl >= 1.0 && fl + 2.0 <= static_cast<double>(nodes_ - 1))) {
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      out[p] = pattern_eval(pairs_[p].first, pairs_[p].second, x, regime_);
    }
    return;
  }
  const auto i = static_cast<std::size_t>(fl);
  const double f = u - fl;
  const double w0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
  const double w1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
  const double w2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
  const double w3 = (f + 1.0) * f * (f - 1.0) / 6.0;
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const double* v = &values_[p * nodes_ + i - 1];
    out[p] = w0 * v[0] + w1 * v[1] + w2 * v[2] + w3 * v[3];
  }
}

double PatternTable::grid_sup(int j, int k) const {
  const std::size_t sl = slot(j, k);
  double sup = 0.0;
  for (std::size_t i = 0; i < nodes_; ++i) sup = std::max(sup, std::abs(values_[sl * nodes_ + i]));
  return sup;
}

PatternTable build_table(int N, const Regime& regime, const TableGrid& grid) {
  if (N < 1) throw DomainError("pattern table order N must be >= 1");
  if (N - 1 > 2 * specfun::kDefaultMaxOrder) {
    throw CapacityError("pattern table order exceeds capacity", 2 * specfun::kDefaultMaxOrder + 1);
  }
  if (!(grid.interp_tol > 0.0)) throw DomainError("interp_tol must be positive");
  if (grid.dx < 0.0 || grid.half_width < 0.0) throw DomainError("grid parameters must be >= 0");

  PatternTable table;
  table.order_ = N;
  table.regime_ = regime;
  table.request_ = grid;
  table.slot_of_.assign(static_cast<std::size_t>(N) * N, -1);
  for (int j = 0; j < N; ++j)
    for (int k = 0; k <= j && j + k < N; ++k) {
      table.slot_of_[static_cast<std::size_t>(j) * N + k] = static_cast<int>(table.pairs_.size());
      table.pairs_.emplace_back(j, k);
    }
  const std::size_t P = table.pairs_.size();

  // The envelope only depends on j + k and grows with it.
  const double T = pattern_bandwidth(N - 1, 0, regime);
  const double s_max = std::sqrt(static_cast<double>(N));
  table.bandwidth_ = T;
  const double nyquist_dx = kPi / (4.0 * T);
  const double hw_request = grid.half_width > 0.0 ? grid.half_width : 12.0 + s_max;

  const quad::Rule rule = quad::gauss_legendre(0.0, T, panels_for(T, hw_request + 2.0 * s_max));
  const std::size_t Q = rule.size();

  // f(x) = (1/pi) Re \int_0^T f~(t) e^{ixt} dt. f~ is real for even j - k
  // and imaginary for odd j - k, so each column needs only cos or sin.
  Eigen::MatrixXd coeff(Q, P);
  Eigen::VectorXd t_nodes(Q);
  for (std::size_t i = 0; i < Q; ++i) t_nodes[i] = rule.nodes[i];
  double m4 = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    const auto [j, k] = table.pairs_[p];
    const bool even = (j - k) % 2 == 0;
    double moment = 0.0;
    for (std::size_t i = 0; i < Q; ++i) {
      const std::complex<double> F = pattern_ft(j, k, rule.nodes[i], regime);
      const double w = rule.weights[i] / kPi;
      coeff(i, p) = even ? w * F.real() : -w * F.imag();
      moment += w * std::abs(F) * std::pow(rule.nodes[i], 4);
    }
    m4 = std::max(m4, moment);
  }

  double dx = grid.dx;
  if (dx > 0.0) {
    if (dx > nyquist_dx * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "table spacing " << dx << " exceeds pi/(4T) = " << nyquist_dx;
      throw DomainError(msg.str());
    }
  } else {
    dx = nyquist_dx;
    if (m4 > 0.0) dx = std::min(dx, std::pow(grid.interp_tol / (kLagrangeConstant * m4), 0.25));
  }
  const auto half_steps = static_cast<std::size_t>(std::ceil(hw_request / dx - 1e-9));
  const std::size_t M = 2 * half_steps + 1;
  if (M * P > PatternTable::kMaxEntries) {
    std::ostringstream msg;
    msg << "pattern table would need " << M * P << " values (limit " << PatternTable::kMaxEntries
        << "); reduce N or relax the grid";
    throw CapacityError(msg.str());
  }
  table.dx_ = dx;
  table.half_width_ = static_cast<double>(half_steps) * dx;
  table.nodes_ = M;
  table.values_.assign(M * P, 0.0);

  std::vector<int> even_cols, odd_cols;
  for (std::size_t p = 0; p < P; ++p) {
    ((table.pairs_[p].first - table.pairs_[p].second) % 2 == 0 ? even_cols : odd_cols)
        .push_back(static_cast<int>(p));
  }
  Eigen::MatrixXd even_coeff(Q, even_cols.size()), odd_coeff(Q, odd_cols.size());
  for (std::size_t c = 0; c < even_cols.size(); ++c) even_coeff.col(c) = coeff.col(even_cols[c]);
  for (std::size_t c = 0; c < odd_cols.size(); ++c) odd_coeff.col(c) = coeff.col(odd_cols[c]);

  const std::size_t blocks = (M + kRowBlock - 1) / kRowBlock;
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t r0 = b * kRowBlock;
    const std::size_t rows = std::min(kRowBlock, M - r0);
    Eigen::MatrixXd cosines(rows, Q), sines(rows, Q);
    for (std::size_t r = 0; r < rows; ++r) {
      const double x = table.node(r0 + r);
      for (std::size_t i = 0; i < Q; ++i) {
        cosines(r, i) = std::cos(x * t_nodes[i]);
        sines(r, i) = std::sin(x * t_nodes[i]);
      }
    }
    const Eigen::MatrixXd ev = cosines * even_coeff;
    const Eigen::MatrixXd od = sines * odd_coeff;
    for (std::size_t c = 0; c < even_cols.size(); ++c)
      for (std::size_t r = 0; r < rows; ++r) table.values_[even_cols[c] * M + r0 + r] = ev(r, c);
    for (std::size_t c = 0; c < odd_cols.size(); ++c)
      for (std::size_t r = 0; r < rows; ++r) table.values_[odd_cols[c] * M + r0 + r] = od(r, c);
  });
  for (double v : table.values_) {
    if (!std::isfinite(v)) throw NumericError("pattern table contains non-finite values");
  }
  return table;
}

void write_table_cache(const std::filesystem::path& path, const PatternTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write pattern cache " + path.string());
  out.write(kCacheMagic, sizeof kCacheMagic);
  put_u32(out, kCacheVersion);
  put_u32(out, static_cast<std::uint32_t>(table.regime_.kind()));
  put_u64(out, static_cast<std::uint64_t>(table.order_));
  put_f64(out, table.regime_.eta());
  put_f64(out, table.regime_.delta());
  put_f64(out, table.request_.dx);
  put_f64(out, table.request_.half_width);
  put_f64(out, table.request_.interp_tol);
  put_f64(out, table.dx_);
  put_f64(out, table.half_width_);
  put_f64(out, table.bandwidth_);
  put_u64(out, table.nodes_);
  put_u64(out, table.values_.size());
  for (double v : table.values_) put_f64(out, v);
  if (!out) throw IoError("failed writing pattern cache " + path.string());
}

std::optional<PatternTable> read_table_cache(const std::filesystem::path& path, int N,
                                             const Regime& regime, const TableGrid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[sizeof kCacheMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) {
    return std::nullopt;
  }
  std::uint32_t version = 0, kind = 0;
  std::uint64_t order = 0, nodes = 0, count = 0;
  double eta = 0, delta = 0, req_dx = 0, req_hw = 0, req_tol = 0, dx = 0, hw = 0, bw = 0;
  if (!get_u32(in, version) || !get_u32(in, kind) || !get_u64(in, order) || !get_f64(in, eta) ||
      !get_f64(in, delta) || !get_f64(in, req_dx) || !get_f64(in, req_hw) ||
      !get_f64(in, req_tol) || !get_f64(in, dx) || !get_f64(in, hw) || !get_f64(in, bw) ||
      !get_u64(in, nodes) || !get_u64(in, count)) {
    return std::nullopt;
  }
  if (version != kCacheVersion || kind != static_cast<std::uint32_t>(regime.kind()) ||
      order != static_cast<std::uint64_t>(N) || eta != regime.eta() || delta != regime.delta() ||
      req_dx != grid.dx || req_hw != grid.half_width || req_tol != grid.interp_tol) {
    return std::nullopt;
  }
  // Rebuild the index layout and check the payload size against it.
  PatternTable table;
  table.order_ = N;
  table.regime_ = regime;
  table.request_ = grid;
  table.slot_of_.assign(static_cast<std::size_t>(N) * N, -1);
  for (int j = 0; j < N; ++j)
    for (int k = 0; k <= j && j + k < N; ++k) {
      table.slot_of_[static_cast<std::size_t>(j) * N + k] = static_cast<int>(table.pairs_.size());
      table.pairs_.emplace_back(j, k);
    }
  if (count != nodes * table.pairs_.size() || count > PatternTable::kMaxEntries) return std::nullopt;
  table.dx_ = dx;
  table.half_width_ = hw;
  table.bandwidth_ = bw;
  table.nodes_ = nodes;
  table.values_.resize(count);
  for (double& v : table.values_) {
    if (!get_f64(in, v)) return std::nullopt;
  }
  return table;
}

PatternTable load_or_build_table(const std::filesystem::path& cache, int N, const Regime& regime,
                                 const TableGrid& grid) {
  if (auto cached = read_table_cache(cache, N, regime, grid)) return std::move(*cached);
  PatternTable table = build_table(N, regime, grid);
  write_table_cache(cache, table);
  return table;
}

std::vector<NormGrowthRow> norm_growth_report(int N_max, const Regime& regime) {
  if (N_max < 0) throw DomainError("N_max must be >= 0");
  if (regime.kind() == Regime::Kind::cutoff) {
    throw DomainError("norm growth is defined for the noiseless and amplified regimes only");
  }
  TableGrid grid;
  grid.dx = kPi / (4.0 * pattern_bandwidth(N_max, 0, regime));
  const PatternTable table = build_table(N_max + 1, regime, grid);

  const auto& pairs = table.pairs();
  std::vector<double> l2(pairs.size()), sup(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t p) {
    l2[p] = pattern_l2_sq(pairs[p].first, pairs[p].second, regime);
    const double s = table.grid_sup(pairs[p].first, pairs[p].second);
    sup[p] = s * s;
  });

  std::vector<double> l2_by_total(N_max + 1, 0.0), sup_by_total(N_max + 1, 0.0);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [j, k] = pairs[p];
    const double multiplicity = j == k ? 1.0 : 2.0;
    l2_by_total[j + k] += multiplicity * l2[p];
    sup_by_total[j + k] += multiplicity * sup[p];
  }
  std::vector<NormGrowthRow> rows;
  double l2_acc = 0.0, sup_acc = 0.0;
  for (int n = 0; n <= N_max; ++n) {
    l2_acc += l2_by_total[n];
    sup_acc += sup_by_total[n];
    rows.push_back({n, l2_acc, sup_acc});
  }
  return rows;
}

}  // namespace qht
