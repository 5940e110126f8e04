#include "qht/wigner_estimator.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include "qht/error.hpp"
#include "qht/parallel.hpp"
#include "qht/quadrature.hpp"

namespace qht {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTableStepsPerH = 40.0;
constexpr double kPhasePerPanel = 8.0;
constexpr std::size_t kRecordBlock = 4096;
constexpr double kFtNodesPerBand = 0.6;
constexpr double kFtExtraNodes = 32.0;

void check_h(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("bandwidth h must be positive");
}

int panels_for(double phase) {
  return std::max(1, static_cast<int>(std::ceil(phase / kPhasePerPanel)));
}

double max_abs_y(const Dataset& data) {
  double m = 0.0;
  for (const Record& r : data.records) m = std::max(m, std::abs(r.y));
  return m / std::sqrt(data.eta);
}

void check_data(const Dataset& data) {
  if (data.records.empty()) throw DomainError("cannot estimate from an empty dataset");
  if (!(data.eta > 0.0 && data.eta <= 1.0)) throw DomainError("dataset eta must lie in (0, 1]");
}

// 2 sin(a c) / a, continuous at a = 0.
double chord_factor(double a, double c) {
  const double x = a * c;
  if (std::abs(x) < 1e-8) return 2.0 * c * (1.0 - x * x / 6.0);
  return 2.0 * std::sin(x) / a;
}

}  // namespace

WignerTuning WignerTuning::make(double h, double s_n) {
  check_h(h);
  if (!(s_n > 0.0) || !std::isfinite(s_n)) throw DomainError("truncation radius must be positive");
  return WignerTuning{h, s_n, 0.0};
}

double kernel_eval(double u, double h, const NoiseModel& noise) {
  check_h(h);
  const double T = 1.0 / h;
  const double gamma = noise.gamma();
  auto f = [&](double t) { return t * std::exp(gamma * t * t) * std::cos(u * t); };
  return quad::integrate_or_throw(f, 0.0, T, 1e-13, panels_for(T * std::abs(u))) / (2.0 * kPi);
}

double kernel_derivative(double u, double h, const NoiseModel& noise) {
  check_h(h);
  const double T = 1.0 / h;
  const double gamma = noise.gamma();
  auto f = [&](double t) { return t * t * std::exp(gamma * t * t) * std::sin(u * t); };
  return -quad::integrate_or_throw(f, 0.0, T, 1e-13, panels_for(T * std::abs(u))) / (2.0 * kPi);
}

double kernel_l2_sq(double h, const NoiseModel& noise) {
  check_h(h);
  const double gamma = noise.gamma();
  auto f = [&](double t) { return t * t * std::exp(2.0 * gamma * t * t); };
  return quad::integrate_or_throw(f, 0.0, 1.0 / h, 1e-13) / (4.0 * kPi);
}

KernelTable::KernelTable(double h, const NoiseModel& noise, double u_max)
    : h_(h), noise_(noise), step_(h / kTableStepsPerH), inv_step_(kTableStepsPerH / h) {
  check_h(h);
  if (!(u_max >= 0.0) || !std::isfinite(u_max)) throw DomainError("u_max must be finite");
  const auto half = static_cast<std::size_t>(std::ceil(u_max / step_)) + 1;
  u_max_ = static_cast<double>(half) * step_;
  const std::size_t count = 2 * half + 1;
  std::vector<double> value(count), slope(count);
  // K is even and K' is odd, so only u >= 0 is integrated.
  parallel_for(half + 1, [&](std::size_t i) {
    const double u = static_cast<double>(i) * step_;
    const double v = kernel_eval(u, h_, noise_);
    const double d = i == 0 ? 0.0 : kernel_derivative(u, h_, noise_) * step_;
    value[half + i] = v;
    value[half - i] = v;
    slope[half + i] = d;
    slope[half - i] = -d;
  });
  intervals_ = count - 1;
  span_ = static_cast<double>(intervals_);
  coeff_.resize(4 * intervals_);
  for (std::size_t i = 0; i < intervals_; ++i) {
    double* c = &coeff_[4 * i];
    c[0] = value[i];
    c[1] = slope[i];
    c[2] = -3.0 * value[i] - 2.0 * slope[i] + 3.0 * value[i + 1] - slope[i + 1];
    c[3] = 2.0 * value[i] + slope[i] - 2.0 * value[i + 1] + slope[i + 1];
  }
}

WignerGrid::WignerGrid(double half_width, double step, std::size_t count, WignerTuning tuning)
    : half_width_(half_width),
      step_(step),
      count_(count),
      tuning_(tuning),
      values_(count * count, 0.0) {}

bool WignerGrid::in_disc(std::size_t iq, std::size_t ip) const {
  const double q = coord(iq), p = coord(ip);
  return q * q + p * p <= tuning_.s_n * tuning_.s_n;
}

WignerGrid make_wigner_grid(const WignerTuning& tuning, const GridParams& params) {
  check_h(tuning.h);
  const double step = params.step > 0.0 ? params.step : tuning.h / 2.0;
  const double hw_request = params.half_width > 0.0 ? params.half_width : tuning.s_n;
  if (hw_request < tuning.s_n) throw DomainError("grid half-width must cover the disc radius s_n");
  const auto half = static_cast<std::size_t>(std::ceil(hw_request / step - 1e-9));
  const std::size_t count = 2 * half + 1;
  if (count * count > 200'000'000) throw CapacityError("Wigner grid too large");
  return WignerGrid(static_cast<double>(half) * step, step, count, tuning);
}

WignerGrid estimate_wigner(const Dataset& data, const WignerTuning& tuning,
                           const GridParams& params) {
  check_data(data);
  WignerGrid grid = make_wigner_grid(tuning, params);
  const NoiseModel noise = NoiseModel::make(data.eta);
  const KernelTable kernel(tuning.h, noise, tuning.s_n + max_abs_y(data));
  const std::size_t n = data.records.size();
  const std::size_t M = grid.count();
  const double inv_root_eta = 1.0 / std::sqrt(data.eta);

  std::vector<double> cosines(n), sines(n), shifts(n);
  for (std::size_t l = 0; l < n; ++l) {
    cosines[l] = std::cos(data.records[l].phi);
    sines[l] = std::sin(data.records[l].phi);
    shifts[l] = data.records[l].y * inv_root_eta;
  }
  const std::size_t blocks = (n + kRecordBlock - 1) / kRecordBlock;
  const double r2 = tuning.s_n * tuning.s_n;

  parallel_for(M, [&](std::size_t iq) {
    const double q = grid.coord(iq);
    if (q * q > r2) return;
    // Nodes of this row inside the disc form one contiguous run.
    std::size_t lo = M, hi = 0;
    for (std::size_t ip = 0; ip < M; ++ip) {
      if (grid.in_disc(iq, ip)) {
        lo = std::min(lo, ip);
        hi = ip + 1;
      }
    }
    if (lo >= hi) return;
    const std::size_t width = hi - lo;
    std::vector<std::vector<double>> partial(blocks, std::vector<double>(width, 0.0));
    for (std::size_t b = 0; b < blocks; ++b) {
      double* acc = partial[b].data();
      const std::size_t end = std::min(n, (b + 1) * kRecordBlock);
      for (std::size_t l = b * kRecordBlock; l < end; ++l) {
        const double base = q * cosines[l] - shifts[l] + grid.coord(lo) * sines[l];
        const double du = grid.step() * sines[l];
        for (std::size_t i = 0; i < width; ++i) acc[i] += kernel(base + static_cast<double>(i) * du);
      }
    }
    std::vector<double> column(blocks);
    for (std::size_t i = 0; i < width; ++i) {
      for (std::size_t b = 0; b < blocks; ++b) column[b] = partial[b][i];
      grid.at(iq, lo + i) = pairwise_sum(column) / static_cast<double>(n);
    }
  });
  return grid;
}

double estimate_wigner_at(const Dataset& data, const WignerTuning& tuning, double q, double p) {
  check_data(data);
  const NoiseModel noise = NoiseModel::make(data.eta);
  const KernelTable kernel(tuning.h, noise, std::hypot(q, p) + max_abs_y(data));
  const double inv_root_eta = 1.0 / std::sqrt(data.eta);
  std::vector<double> terms(data.records.size());
  for (std::size_t l = 0; l < terms.size(); ++l) {
    const Record& r = data.records[l];
    terms[l] = kernel(q * std::cos(r.phi) + p * std::sin(r.phi) - r.y * inv_root_eta);
  }
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

std::vector<std::complex<double>> estimate_wigner_ft(const Dataset& data,
                                                     const WignerTuning& tuning,
                                                     std::span<const std::array<double, 2>> w) {
  check_data(data);
  const NoiseModel noise = NoiseModel::make(data.eta);
  const double s = tuning.s_n;
  const KernelTable kernel(tuning.h, noise, s + max_abs_y(data));
  const double inv_root_eta = 1.0 / std::sqrt(data.eta);
  const std::size_t W = w.size();
  const std::size_t n = data.records.size();

  // Record l contributes \int_{-s}^{s} K(u - y_l) e^{-i u w_par} 2 sin(w_perp c)/w_perp du,
  // c = sqrt(s^2 - u^2), with (w_par, w_perp) the components of w along and
  // across (cos phi, sin phi). With u = s sin(theta) the integrand extends to
  // a smooth 2pi-periodic function of theta whose mirror half (theta -> pi -
  // theta) repeats it, so the midpoint rule on [-pi/2, pi/2] is the periodic
  // trapezoid rule. Its Fourier content in theta stops near
  // s (1/h + |w_par| + |w_perp|).
  double w_max = 0.0;
  for (const auto& v : w) w_max = std::max(w_max, std::hypot(v[0], v[1]));
  const double bandwidth = s * (1.0 / tuning.h + std::sqrt(2.0) * w_max) + 1.0;
  const auto Q = static_cast<std::size_t>(std::ceil(kFtNodesPerBand * bandwidth + kFtExtraNodes));
  std::vector<double> u_node(Q), c_node(Q), weight(Q);
  for (std::size_t i = 0; i < Q; ++i) {
    const double theta = -kPi / 2.0 + (static_cast<double>(i) + 0.5) * kPi / static_cast<double>(Q);
    u_node[i] = s * std::sin(theta);
    c_node[i] = s * std::cos(theta);
    weight[i] = kPi / static_cast<double>(Q) * c_node[i];
  }

  const std::size_t blocks = (n + kRecordBlock - 1) / kRecordBlock;
  std::vector<std::vector<std::complex<double>>> partial(
      blocks, std::vector<std::complex<double>>(W));
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> k_vals(Q);
    const std::size_t end = std::min(n, (b + 1) * kRecordBlock);
    for (std::size_t l = b * kRecordBlock; l < end; ++l) {
      const Record& r = data.records[l];
      const double y = r.y * inv_root_eta;
      const double c = std::cos(r.phi), sn = std::sin(r.phi);
      for (std::size_t i = 0; i < Q; ++i) k_vals[i] = weight[i] * kernel(u_node[i] - y);
      for (std::size_t v = 0; v < W; ++v) {
        const double w_par = w[v][0] * c + w[v][1] * sn;
        const double w_perp = -w[v][0] * sn + w[v][1] * c;
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < Q; ++i) {
          acc += k_vals[i] * chord_factor(w_perp, c_node[i]) *
                 std::polar(1.0, -u_node[i] * w_par);
        }
        partial[b][v] += acc;
      }
    }
  });
  std::vector<std::complex<double>> out(W);
  std::vector<std::complex<double>> column(blocks);
  for (std::size_t v = 0; v < W; ++v) {
    for (std::size_t b = 0; b < blocks; ++b) column[b] = partial[b][v];
    out[v] = pairwise_sum(column) / static_cast<double>(n);
  }
  return out;
}

WignerTuning select_wigner_tuning(double n, const NoiseModel& noise, const StateClass& cls) {
  if (!(n >= 3.0) || !std::isfinite(n)) throw DomainError("select_wigner_tuning needs n >= 3");
  if (!(noise.eta > 0.0 && noise.eta <= 1.0)) throw DomainError("eta must lie in (0, 1]");
  const double L = std::log(n);
  const double gamma = noise.gamma();
  const double beta = cls.beta;
  WignerTuning t;
  if (cls.r == 2.0) {
    const double inv_h2 = 2.0 / (4.0 * gamma + beta) * L + 1.0 / (4.0 * gamma + beta) * std::log(L);
    if (!(inv_h2 >= 1.0)) throw DomainError("n too small: the bandwidth formula gives h > 1");
    t.h = 1.0 / std::sqrt(inv_h2);
    t.residual = 1.0 / (t.h * t.h) - inv_h2;
  } else {
    const double rhs = L - std::pow(std::log(L), 2);
    const double r = cls.r;
    auto f = [&](double h) {
      return std::pow(2.0, 1.0 - r) * beta / std::pow(h, r) + 2.0 * gamma / (h * h) - rhs;
    };
    if (!(f(1.0) <= 0.0)) {
      std::ostringstream msg;
      msg << "no bandwidth in (0, 1] solves the defining equation (n = " << n
          << " is too small for this class)";
      throw NumericError(msg.str());
    }
    double lo = 0.5;
    while (f(lo) < 0.0) {
      lo *= 0.5;
      if (lo < 1e-300) throw NumericError("bandwidth bracket search failed");
    }
    const auto tol = boost::math::tools::eps_tolerance<double>(52);
    std::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::bisect(f, lo, 1.0, tol, iters);
    t.h = 0.5 * (a + b);
    t.residual = f(t.h);
  }
  t.s_n = 1.0 / t.h;
  return t;
}

void write_wigner_grid(const std::filesystem::path& csv_path, const WignerGrid& grid, double eta,
                       std::size_t n) {
  std::FILE* f = std::fopen(csv_path.string().c_str(), "w");
  if (!f) throw IoError("cannot write " + csv_path.string());
  std::fputs("q,p,w\n", f);
  for (std::size_t iq = 0; iq < grid.count(); ++iq)
    for (std::size_t ip = 0; ip < grid.count(); ++ip) {
      std::fprintf(f, "%.17g,%.17g,%.17g\n", grid.coord(iq), grid.coord(ip), grid.at(iq, ip));
    }
  std::fclose(f);
  nlohmann::json side = {{"h", grid.tuning().h},
                         {"s_n", grid.tuning().s_n},
                         {"eta", eta},
                         {"n", n},
                         {"step", grid.step()},
                         {"half_width", grid.half_width()}};
  auto side_path = csv_path;
  side_path.replace_extension(".json");
  std::ofstream out(side_path);
  if (!out) throw IoError("cannot write sidecar for " + csv_path.string());
  out << side.dump(2) << '\n';
}

}  // namespace qht
