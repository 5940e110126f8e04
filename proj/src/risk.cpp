#include "qht/risk.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "qht/error.hpp"
#include "qht/parallel.hpp"
#include "qht/rng.hpp"
#include "qht/specfun.hpp"

namespace qht {
namespace {

constexpr double kPi = std::numbers::pi;

void check_replications(int R) {
  if (R < 2) throw DomainError("at least 2 replications are required");
}

double sample_sd(const std::vector<double>& v) {
  const double mean = pairwise_sum(v) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

nlohmann::json dm_tuning_json(const DmTuning& t) {
  nlohmann::json j = {{"N", t.N}, {"N_real", t.N_real}, {"residuals", t.residuals}};
  j["delta"] = t.delta ? nlohmann::json(*t.delta) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json wigner_tuning_json(const WignerTuning& t) {
  return {{"h", t.h}, {"s_n", t.s_n}, {"residual", t.residual}};
}

}  // namespace

std::string to_string(EstimatorKind kind) { return kind == EstimatorKind::dm ? "dm" : "wigner"; }

RiskCell dm_mise(const DensityMatrix& truth, const DmRiskConfig& cfg) {
  check_replications(cfg.replications);
  const int N = cfg.tuning.N;
  const Regime regime = regime_for(cfg.noise, cfg.tuning);
  const PatternTable table = build_table(N, regime);
  const int D = std::max(N, truth.dim());
  const ComplexMatrix rho = truth.resized(D).entries();
  const int R = cfg.replications;

  std::vector<ComplexMatrix> estimates;
  std::vector<double> errors;
  for (int r = 0; r < R; ++r) {
    const Dataset data = sample(truth, cfg.noise, cfg.n, rng::derive_seed(cfg.seed, r),
                                cfg.state_id);
    const ComplexMatrix est = estimate_dm(data, cfg.tuning, table).resized(D).entries();
    errors.push_back((est - rho).squaredNorm());
    estimates.push_back(est);
  }

  RiskCell cell;
  cell.n = cfg.n;
  cell.replications = R;
  cell.mise_mean = pairwise_sum(errors) / R;
  cell.mise_sd = sample_sd(errors);
  cell.tuning = dm_tuning_json(cfg.tuning);
  for (int j = 0; j < D; ++j)
    for (int k = 0; k < D; ++k) {
      if (j + k >= N) {
        cell.b1_sq += std::norm(rho(j, k));
        continue;
      }
      Complex mean = 0.0;
      for (const auto& e : estimates) mean += e(j, k);
      mean /= static_cast<double>(R);
      cell.b2_sq += std::norm(mean - rho(j, k));
      double var = 0.0;
      for (const auto& e : estimates) var += std::norm(e(j, k) - mean);
      cell.sigma_sq += var / R;
    }
  return cell;
}

double wigner_ise(const WignerGrid& estimate, const DensityMatrix& truth) {
  const std::size_t M = estimate.count();
  const double area = estimate.step() * estimate.step();
  std::vector<double> err_rows(M, 0.0), truth_rows(M, 0.0);
  parallel_for(M, [&](std::size_t iq) {
    for (std::size_t ip = 0; ip < M; ++ip) {
      if (!estimate.in_disc(iq, ip)) continue;
      const double w = wigner_eval(truth, estimate.coord(iq), estimate.coord(ip));
      const double d = estimate.at(iq, ip) - w;
      err_rows[iq] += d * d * area;
      truth_rows[iq] += w * w * area;
    }
  });
  const double outside = std::max(0.0, hs_norm_sq(truth) / (2.0 * kPi) - pairwise_sum(truth_rows));
  return pairwise_sum(err_rows) + outside;
}

RiskCell wigner_mise(const DensityMatrix& truth, const WignerRiskConfig& cfg) {
  check_replications(cfg.replications);
  const int R = cfg.replications;
  const WignerGrid layout = make_wigner_grid(cfg.tuning, cfg.grid);
  const std::size_t M = layout.count();
  const double area = layout.step() * layout.step();

  std::vector<std::size_t> disc;
  for (std::size_t iq = 0; iq < M; ++iq)
    for (std::size_t ip = 0; ip < M; ++ip)
      if (layout.in_disc(iq, ip)) disc.push_back(iq * M + ip);
  std::vector<double> truth_vals(disc.size());
  parallel_for(disc.size(), [&](std::size_t i) {
    truth_vals[i] = wigner_eval(truth, layout.coord(disc[i] / M), layout.coord(disc[i] % M));
  });
  std::vector<double> truth_sq(disc.size());
  for (std::size_t i = 0; i < disc.size(); ++i) truth_sq[i] = truth_vals[i] * truth_vals[i] * area;
  const double outside = std::max(0.0, hs_norm_sq(truth) / (2.0 * kPi) - pairwise_sum(truth_sq));

  std::vector<double> sum(disc.size(), 0.0), sum_sq(disc.size(), 0.0);
  std::vector<double> errors;
  for (int r = 0; r < R; ++r) {
    const Dataset data = sample(truth, cfg.noise, cfg.n, rng::derive_seed(cfg.seed, r),
                                cfg.state_id);
    const WignerGrid est = estimate_wigner(data, cfg.tuning, cfg.grid);
    std::vector<double> sq(disc.size());
    for (std::size_t i = 0; i < disc.size(); ++i) {
      const double v = est.values()[disc[i]];
      const double d = v - truth_vals[i];
      sq[i] = d * d * area;
      sum[i] += v;
      sum_sq[i] += v * v;
    }
    errors.push_back(pairwise_sum(sq) + outside);
  }

  RiskCell cell;
  cell.n = cfg.n;
  cell.replications = R;
  cell.mise_mean = pairwise_sum(errors) / R;
  cell.mise_sd = sample_sd(errors);
  cell.b1_sq = outside;
  cell.tuning = wigner_tuning_json(cfg.tuning);
  cell.tuning["grid_step"] = layout.step();
  std::vector<double> bias(disc.size()), var(disc.size());
  for (std::size_t i = 0; i < disc.size(); ++i) {
    const double mean = sum[i] / R;
    bias[i] = (mean - truth_vals[i]) * (mean - truth_vals[i]) * area;
    var[i] = std::max(0.0, sum_sq[i] / R - mean * mean) * area;
  }
  cell.b2_sq = pairwise_sum(bias);
  cell.sigma_sq = pairwise_sum(var);
  return cell;
}

double decay_prefactor(double z, const StateClass& cls) {
  const double B = cls.B, r = cls.r;
  if (r == 2.0) {
    const double series = 1.0 / std::pow(1.0 - std::exp(-B), 2);
    const double theta = 1.0 / std::pow(1.0 + std::sqrt(B), 2);
    return (series + 2.0 * std::exp(B) * theta / B * z * z) / kPi;
  }
  // sum_{m,n} e^{-B (m+n)^{r/2}} = sum_t (t + 1) e^{-B t^{r/2}}
  double series = 0.0;
  for (long t = 0;; ++t) {
    const double term = (t + 1.0) * std::exp(-B * std::pow(static_cast<double>(t), r / 2.0));
    series += term;
    if (t > 10 && term < 1e-17 * series) break;
  }
  return (series + 4.0 / (B * r) * std::pow(z, 4.0 - r)) / kPi;
}

DecayReport decay_check(const DensityMatrix& truth, const StateClass& cls,
                        const DecayOptions& options) {
  if (!(options.z_step > 0.0 && options.z_max > options.z_min && options.angles > 0)) {
    throw DomainError("invalid decay scan options");
  }
  DecayReport report;
  report.beta = cls.beta;
  const auto steps = static_cast<std::size_t>(std::floor((options.z_max - options.z_min) /
                                                         options.z_step + 1e-9)) + 1;
  std::vector<double> ratio_direct(steps), ratio_fourier(steps);
  parallel_for(steps, [&](std::size_t i) {
    const double z = options.z_min + static_cast<double>(i) * options.z_step;
    const double bound = decay_prefactor(z, cls) * std::exp(-cls.beta * std::pow(z, cls.r));
    const double bound_ft =
        decay_prefactor(z / 2.0, cls) * std::exp(-cls.beta * std::pow(z / 2.0, cls.r));
    double worst = 0.0, worst_ft = 0.0;
    for (int a = 0; a < options.angles; ++a) {
      const double ang = 2.0 * kPi * a / options.angles;
      const double q = z * std::cos(ang), p = z * std::sin(ang);
      worst = std::max(worst, std::abs(wigner_eval(truth, q, p)) / bound);
      const double ft = std::abs(wigner_ft_eval(truth, q, p)) / specfun::kFourierConventionFactor;
      worst_ft = std::max(worst_ft, ft / bound_ft);
    }
    ratio_direct[i] = worst;
    ratio_fourier[i] = worst_ft;
  });

  auto summarize = [&](const std::vector<double>& ratio, std::optional<double>& z0, int& violations,
                       double& max_ratio) {
    std::size_t first_ok = steps;
    for (std::size_t i = steps; i-- > 0;) {
      if (ratio[i] > 1.0) break;
      first_ok = i;
    }
    violations = 0;
    for (double v : ratio) violations += v > 1.0 ? 1 : 0;
    if (first_ok < steps) {
      z0 = options.z_min + static_cast<double>(first_ok) * options.z_step;
      max_ratio = 0.0;
      for (std::size_t i = first_ok; i < steps; ++i) max_ratio = std::max(max_ratio, ratio[i]);
    }
  };
  summarize(ratio_direct, report.z0_direct, report.violations_direct, report.max_ratio_direct);
  summarize(ratio_fourier, report.z0_fourier, report.violations_fourier,
            report.max_ratio_fourier);
  const double limit = 0.5 * options.z_max;
  report.passed = report.z0_direct && report.z0_fourier && *report.z0_direct <= limit &&
                  *report.z0_fourier <= limit;
  return report;
}

std::vector<TailRow> tail_lemma_check(double C, double nu, const std::vector<double>& zs) {
  if (!(C > 0.0 && nu > 0.0)) throw DomainError("tail lemma needs C > 0 and nu > 0");
  std::vector<TailRow> rows;
  for (double z : zs) {
    if (!(z > 0.0)) throw DomainError("tail lemma needs z > 0");
    // sum_{m+n >= z} e^{-C (m+n)^nu} = sum_{t >= ceil z} (t + 1) e^{-C t^nu}
    std::vector<double> terms;
    for (auto t = static_cast<long>(std::ceil(z));; ++t) {
      const double term = (t + 1.0) * std::exp(-C * std::pow(static_cast<double>(t), nu));
      terms.push_back(term);
      if (term < 1e-18 * terms.front() && t > 2 * z) break;
      if (terms.size() > 50'000'000) throw NumericError("tail series did not converge");
    }
    TailRow row;
    row.z = z;
    row.lhs = pairwise_sum(terms);
    row.rhs = 2.0 / (C * nu) * std::pow(z, 2.0 - nu) * std::exp(-C * std::pow(z, nu));
    row.holds = row.lhs <= row.rhs;
    rows.push_back(row);
  }
  return rows;
}

RateFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw NumericError("fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw NumericError("non-finite fit input");
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw NumericError("degenerate fit: all predictor values are equal");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

RiskReport rate_curve(const DensityMatrix& truth, const RateConfig& cfg) {
  if (cfg.ns.size() < 2) throw DomainError("rate curve needs at least 2 sample sizes");
  RiskReport report;
  report.kind = cfg.kind;
  report.state_id = cfg.state_id;
  report.predictor = cfg.predictor;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
    const std::size_t n = cfg.ns[i];
    const std::uint64_t cell_seed = rng::derive_seed(cfg.seed, 1'000'000 + i);
    RiskCell cell;
    double power = 0.0;
    if (cfg.kind == EstimatorKind::dm) {
      DmRiskConfig c;
      c.n = n;
      c.replications = cfg.replications;
      c.noise = cfg.noise;
      c.tuning = select_tuning(static_cast<double>(n), cfg.noise, cfg.cls);
      c.seed = cell_seed;
      c.state_id = cfg.state_id;
      cell = dm_mise(truth, c);
      power = std::pow(c.tuning.N_real, cfg.cls.r / 2.0);
    } else {
      WignerRiskConfig c;
      c.n = n;
      c.replications = cfg.replications;
      c.noise = cfg.noise;
      c.tuning = select_wigner_tuning(static_cast<double>(n), cfg.noise, cfg.cls);
      c.grid = cfg.grid;
      c.seed = cell_seed;
      c.state_id = cfg.state_id;
      cell = wigner_mise(truth, c);
      power = std::pow(c.tuning.s_n, cfg.cls.r);
    }
    x.push_back(cfg.predictor == RatePredictor::log_n ? std::log(static_cast<double>(n)) : power);
    if (!(cell.mise_mean > 0.0)) throw NumericError("mise must be positive to fit a rate");
    y.push_back(std::log(cell.mise_mean));
    report.cells.push_back(std::move(cell));
  }
  report.rate_fit = fit_line(x, y);
  return report;
}

nlohmann::json to_json(const RiskReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const RiskCell& c : report.cells) {
    cells.push_back({{"n", c.n},
                     {"replications", c.replications},
                     {"mise_mean", c.mise_mean},
                     {"mise_sd", c.mise_sd},
                     {"b1_sq", c.b1_sq},
                     {"b2_sq", c.b2_sq},
                     {"sigma_sq", c.sigma_sq},
                     {"tuning", c.tuning}});
  }
  nlohmann::json j = {{"estimator_kind", to_string(report.kind)},
                      {"state_id", report.state_id},
                      {"predictor", report.predictor == RatePredictor::log_n ? "log_n"
                                                                             : "tuning_power"},
                      {"cells", cells}};
  if (report.rate_fit) {
    j["rate_fit"] = {{"slope", report.rate_fit->slope},
                     {"intercept", report.rate_fit->intercept},
                     {"r_squared", report.rate_fit->r_squared}};
  } else {
    j["rate_fit"] = nullptr;
  }
  return j;
}

void write_risk_report(const std::filesystem::path& json_path,
                       const std::filesystem::path& csv_path, const RiskReport& report) {
  std::ofstream js(json_path);
  if (!js) throw IoError("cannot write " + json_path.string());
  js << to_json(report).dump(2) << '\n';
  std::FILE* f = std::fopen(csv_path.string().c_str(), "w");
  if (!f) throw IoError("cannot write " + csv_path.string());
  std::fputs("estimator,n,replications,mise_mean,mise_sd,b1_sq,b2_sq,sigma_sq\n", f);
  for (const RiskCell& c : report.cells) {
    std::fprintf(f, "%s,%zu,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", to_string(report.kind).c_str(),
                 c.n, c.replications, c.mise_mean, c.mise_sd, c.b1_sq, c.b2_sq, c.sigma_sq);
  }
  std::fclose(f);
}

}  // namespace qht
