// qht: command-line front end for the homodyne tomography library.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qht/dm_estimator.hpp"
#include "qht/error.hpp"
#include "qht/parallel.hpp"
#include "qht/pattern.hpp"
#include "qht/risk.hpp"
#include "qht/sampler.hpp"
#include "qht/state.hpp"
#include "qht/verify.hpp"
#include "qht/wigner_estimator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct Global {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_dir = ".";
};

struct MakeStateArgs {
  std::string kind = "fock";
  int k = 0;
  double alpha_re = 0.0;
  double alpha_im = 0.0;
  double mean_photons = 0.0;
  int dim = 0;
  double B = 1.0;
  double r = 2.0;
  std::string out = "state.json";
};

struct SimulateArgs {
  std::string state;
  std::size_t n = 1000;
  double eta = 1.0;
  std::string out = "data.csv";
};

struct EstimateArgs {
  std::string data;
  bool auto_tune = false;
  double B = 1.0;
  double r = 2.0;
  // dm
  int N = 0;
  double delta = 0.0;
  bool project = false;
  std::string table_cache;
  // wigner
  double h = 0.0;
  double sn = 0.0;
  double step = 0.0;
  double half_width = 0.0;
  std::string out;
};

struct VerifyArgs {
  double perturb = 1.0;
  bool skip_norm_growth = false;
  std::string out = "verify.json";
};

struct BenchArgs {
  std::string estimator = "dm";
  std::string state;
  double eta = 1.0;
  std::vector<std::size_t> ns{1000, 10000};
  int reps = 20;
  double B = 1.0;
  double r = 2.0;
  std::string predictor = "log_n";
  double step = 0.0;
  std::string prefix = "risk";
};

fs::path in_out_dir(const Global& g, const std::string& name) {
  const fs::path p(name);
  return p.is_absolute() ? p : fs::path(g.out_dir) / p;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw qht::IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json base_manifest(const std::string& command, const Global& g) {
  return {{"command", command},
          {"version", QHT_VERSION},
          {"seed", g.seed},
          {"threads", qht::thread_limit()},
          {"out_dir", g.out_dir}};
}

void write_manifest(const Global& g, const std::string& stem, const json& manifest) {
  write_json(fs::path(g.out_dir) / (stem + ".manifest.json"), manifest);
}

qht::StateClass class_from(double B, double r) { return qht::StateClass::make(B, r); }

int run_make_state(const Global& g, const MakeStateArgs& a) {
  qht::StateKind kind;
  if (a.kind == "fock") {
    kind = qht::state_kind::Fock{a.k};
  } else if (a.kind == "coherent") {
    kind = qht::state_kind::Coherent{{a.alpha_re, a.alpha_im}};
  } else if (a.kind == "thermal") {
    kind = qht::state_kind::Thermal{a.mean_photons};
  } else {
    throw qht::DomainError("--kind must be fock, coherent or thermal");
  }
  qht::DensityMatrix rho = qht::make_state(kind, a.dim);
  rho.set_state_class(class_from(a.B, a.r));
  const std::string id = qht::describe(kind);
  const fs::path out = in_out_dir(g, a.out);
  qht::write_state_file(out, rho, {{"state_id", id}});

  const qht::PhysicalReport phys = rho.check_physical();
  json m = base_manifest("make-state", g);
  m["parameters"] = {{"kind", a.kind}, {"k", a.k},   {"alpha", {a.alpha_re, a.alpha_im}},
                     {"nbar", a.mean_photons}, {"dim", a.dim}, {"B", a.B}, {"r", a.r}};
  m["state_id"] = id;
  m["trace_deficit"] = phys.trace_deficit;
  m["min_eigenvalue"] = phys.min_eigenvalue;
  m["outputs"] = {out.string()};
  write_manifest(g, "make-state", m);
  std::cout << "wrote " << out.string() << " (" << id << ", trace deficit "
            << phys.trace_deficit << ")\n";
  return kExitOk;
}

int run_simulate(const Global& g, const SimulateArgs& a) {
  if (!fs::exists(a.state)) throw qht::IoError("state file not found: " + a.state);
  const qht::DensityMatrix rho = qht::read_state_file(a.state);
  std::string id = fs::path(a.state).stem().string();
  {
    std::ifstream in(a.state);
    const json j = json::parse(in, nullptr, false);
    if (j.is_object() && j.contains("state_id")) id = j["state_id"].get<std::string>();
  }
  const qht::NoiseModel noise = qht::NoiseModel::make(a.eta);
  const qht::Dataset data = qht::sample(rho, noise, a.n, g.seed, id);
  const fs::path out = in_out_dir(g, a.out);
  qht::write_dataset(out, data);

  double mean = 0.0;
  for (const qht::Record& r : data.records) mean += r.y;
  mean /= static_cast<double>(data.size());
  double var = 0.0;
  for (const qht::Record& r : data.records) var += (r.y - mean) * (r.y - mean);
  var /= static_cast<double>(data.size() > 1 ? data.size() - 1 : 1);

  json m = base_manifest("simulate", g);
  m["parameters"] = {{"state", a.state}, {"n", a.n}, {"eta", a.eta}};
  m["state_id"] = id;
  m["summary"] = {{"mean_y", mean}, {"var_y", var}};
  m["outputs"] = {out.string(), qht::sidecar_path(out).string()};
  write_manifest(g, "simulate", m);
  std::cout << "wrote " << data.size() << " records to " << out.string() << '\n';
  return kExitOk;
}

qht::Dataset load_data(const std::string& path) {
  if (!fs::exists(path)) throw qht::IoError("dataset not found: " + path);
  return qht::read_dataset(path);
}

int run_estimate_dm(const Global& g, const EstimateArgs& a) {
  const qht::Dataset data = load_data(a.data);
  const qht::NoiseModel noise = qht::NoiseModel::make(data.eta);
  qht::DmTuning tuning;
  if (a.auto_tune) {
    tuning = qht::select_tuning(static_cast<double>(data.size()), noise, class_from(a.B, a.r));
  } else {
    if (a.N < 1) throw qht::DomainError("--N must be >= 1 unless --auto is given");
    tuning.N = a.N;
    tuning.N_real = a.N;
    if (a.delta > 0.0) tuning.delta = a.delta;
  }
  const qht::Regime regime = qht::regime_for(noise, tuning);
  const qht::PatternTable table =
      a.table_cache.empty() ? qht::build_table(tuning.N, regime)
                            : qht::load_or_build_table(a.table_cache, tuning.N, regime);
  qht::DensityMatrix rho = qht::estimate_dm(data, tuning, table);
  std::optional<double> projection_distance;
  if (a.project) {
    qht::Projection p = qht::project_physical(rho);
    rho = std::move(p.rho);
    projection_distance = p.distance_sq;
  }
  const fs::path out = in_out_dir(g, a.out.empty() ? "rho_hat.json" : a.out);
  const json tuning_json = {{"N", tuning.N},
                            {"N_real", tuning.N_real},
                            {"delta", tuning.delta ? json(*tuning.delta) : json(nullptr)},
                            {"residuals", tuning.residuals},
                            {"regime", regime.describe()}};
  json diagnostics = {{"n", data.size()}, {"eta", data.eta}};
  if (projection_distance) diagnostics["projection_distance_sq"] = *projection_distance;
  qht::write_state_file(out, rho,
                        {{"source", a.data}, {"tuning", tuning_json}, {"diagnostics", diagnostics}});

  json m = base_manifest("estimate dm", g);
  m["parameters"] = {{"data", a.data},       {"auto", a.auto_tune}, {"B", a.B},
                     {"r", a.r},             {"project", a.project},
                     {"table_cache", a.table_cache}};
  m["tuning"] = tuning_json;
  m["diagnostics"] = diagnostics;
  m["outputs"] = {out.string()};
  write_manifest(g, "estimate-dm", m);
  std::cout << "N = " << tuning.N;
  if (tuning.delta) std::cout << ", delta = " << *tuning.delta;
  std::cout << "; wrote " << out.string() << '\n';
  return kExitOk;
}

int run_estimate_wigner(const Global& g, const EstimateArgs& a) {
  const qht::Dataset data = load_data(a.data);
  const qht::NoiseModel noise = qht::NoiseModel::make(data.eta);
  qht::WignerTuning tuning;
  if (a.auto_tune) {
    tuning = qht::select_wigner_tuning(static_cast<double>(data.size()), noise,
                                       class_from(a.B, a.r));
  } else {
    if (!(a.h > 0.0) || !(a.sn > 0.0)) {
      throw qht::DomainError("--h and --sn must be positive unless --auto is given");
    }
    tuning = qht::WignerTuning::make(a.h, a.sn);
  }
  const qht::GridParams grid{a.step, a.half_width};
  const qht::WignerGrid w = qht::estimate_wigner(data, tuning, grid);
  const fs::path out = in_out_dir(g, a.out.empty() ? "wigner.csv" : a.out);
  qht::write_wigner_grid(out, w, data.eta, data.size());

  json m = base_manifest("estimate wigner", g);
  m["parameters"] = {{"data", a.data}, {"auto", a.auto_tune}, {"B", a.B},
                     {"r", a.r},       {"step", a.step},      {"half_width", a.half_width}};
  m["tuning"] = {{"h", tuning.h}, {"s_n", tuning.s_n}, {"residual", tuning.residual}};
  m["grid"] = {{"step", w.step()}, {"half_width", w.half_width()}, {"count", w.count()}};
  m["n"] = data.size();
  m["eta"] = data.eta;
  m["outputs"] = {out.string(), qht::sidecar_path(out).string()};
  write_manifest(g, "estimate-wigner", m);
  std::cout << "h = " << tuning.h << ", s_n = " << tuning.s_n << "; wrote " << out.string()
            << '\n';
  return kExitOk;
}

int run_verify(const Global& g, const VerifyArgs& a) {
  qht::VerifyOptions options;
  options.envelope_factor = a.perturb;
  options.include_norm_growth = !a.skip_norm_growth;
  const auto results = qht::run_verification(options);
  const json report = qht::to_json(results);
  const fs::path out = in_out_dir(g, a.out);
  write_json(out, report);
  for (const qht::CheckResult& r : results) {
    std::cout << (r.passed ? "ok    " : "FAILED") << "  " << r.name << "  margin " << r.margin
              << '\n';
  }
  json m = base_manifest("verify", g);
  m["parameters"] = {{"perturb", a.perturb}, {"skip_norm_growth", a.skip_norm_growth}};
  m["passed"] = report["passed"];
  m["outputs"] = {out.string()};
  write_manifest(g, "verify", m);
  return report["passed"].get<bool>() ? kExitOk : kExitNumeric;
}

const char* kPlotScript = R"(import csv
import math
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

src = sys.argv[1] if len(sys.argv) > 1 else "{csv}"
rows = list(csv.DictReader(open(src)))
n = [float(r["n"]) for r in rows]
fig, ax = plt.subplots()
for key in ("mise_mean", "b1_sq", "b2_sq", "sigma_sq"):
    ys = [float(r[key]) for r in rows]
    if all(y > 0 for y in ys):
        ax.loglog(n, ys, marker="o", label=key)
ax.set_xlabel("n")
ax.set_ylabel("risk")
ax.legend()
fig.savefig(src.rsplit(".", 1)[0] + ".png", dpi=120)
)";

int run_bench(const Global& g, const BenchArgs& a) {
  if (!fs::exists(a.state)) throw qht::IoError("state file not found: " + a.state);
  const qht::DensityMatrix truth = qht::read_state_file(a.state);
  qht::RateConfig cfg;
  if (a.estimator == "dm") {
    cfg.kind = qht::EstimatorKind::dm;
  } else if (a.estimator == "wigner") {
    cfg.kind = qht::EstimatorKind::wigner;
  } else {
    throw qht::DomainError("--estimator must be dm or wigner");
  }
  cfg.ns = a.ns;
  cfg.replications = a.reps;
  cfg.noise = qht::NoiseModel::make(a.eta);
  cfg.cls = class_from(a.B, a.r);
  cfg.predictor =
      a.predictor == "tuning_power" ? qht::RatePredictor::tuning_power : qht::RatePredictor::log_n;
  cfg.grid.step = a.step;
  cfg.seed = g.seed;
  cfg.state_id = fs::path(a.state).stem().string();
  const qht::RiskReport report = qht::rate_curve(truth, cfg);

  const fs::path json_path = in_out_dir(g, a.prefix + ".json");
  const fs::path csv_path = in_out_dir(g, a.prefix + ".csv");
  const fs::path plot_path = in_out_dir(g, "plot_" + a.prefix + ".py");
  qht::write_risk_report(json_path, csv_path, report);
  std::string script = kPlotScript;
  script.replace(script.find("{csv}"), 5, csv_path.filename().string());
  std::ofstream(plot_path) << script;

  for (const qht::RiskCell& c : report.cells) {
    std::cout << "n = " << c.n << "  mise = " << c.mise_mean << " +- " << c.mise_sd << '\n';
  }
  if (report.rate_fit) std::cout << "slope " << report.rate_fit->slope << '\n';

  json m = base_manifest("bench", g);
  m["parameters"] = {{"estimator", a.estimator}, {"state", a.state}, {"eta", a.eta},
                     {"ns", a.ns},               {"reps", a.reps},   {"B", a.B},
                     {"r", a.r},                 {"predictor", a.predictor},
                     {"step", a.step}};
  m["outputs"] = {json_path.string(), csv_path.string(), plot_path.string()};
  write_manifest(g, "bench", m);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homodyne tomography: simulate data, reconstruct states, check bounds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(QHT_VERSION));

  Global g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker thread cap (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out-dir", g.out_dir, "Directory for outputs and manifests")
      ->capture_default_str();

  MakeStateArgs ms;
  auto* make_state = app.add_subcommand("make-state", "Write a test state as JSON");
  make_state->add_option("--kind", ms.kind, "fock, coherent or thermal")
      ->check(CLI::IsMember({"fock", "coherent", "thermal"}))
      ->capture_default_str();
  make_state->add_option("--k", ms.k, "Photon number of a Fock state")->check(CLI::NonNegativeNumber);
  make_state->add_option("--alpha", ms.alpha_re, "Coherent amplitude, real part");
  make_state->add_option("--alpha-im", ms.alpha_im, "Coherent amplitude, imaginary part");
  make_state->add_option("--nbar", ms.mean_photons, "Thermal mean photon number")
      ->check(CLI::NonNegativeNumber);
  make_state->add_option("--dim", ms.dim, "Fock truncation dimension")
      ->required()
      ->check(CLI::PositiveNumber);
  make_state->add_option("--B", ms.B, "Class parameter B")->capture_default_str();
  make_state->add_option("--r", ms.r, "Class parameter r")->capture_default_str();
  make_state->add_option("--out", ms.out, "Output file")->capture_default_str();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Draw noisy homodyne data from a state");
  simulate->add_option("--state", sim.state, "State JSON")->required();
  simulate->add_option("--n", sim.n, "Number of records")->check(CLI::PositiveNumber);
  simulate->add_option("--eta", sim.eta, "Detection efficiency")->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--out", sim.out, "Dataset CSV")->capture_default_str();

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Reconstruct from a dataset");
  estimate->require_subcommand(1);
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--data", est.data, "Dataset CSV")->required();
    sub->add_flag("--auto", est.auto_tune, "Select tuning from n, eta and the class");
    sub->add_option("--B", est.B, "Class parameter B for --auto");
    sub->add_option("--r", est.r, "Class parameter r for --auto");
    sub->add_option("--out", est.out, "Output file");
  };
  auto* est_dm = estimate->add_subcommand("dm", "Pattern-function density matrix estimate");
  add_common(est_dm);
  est_dm->add_option("--N", est.N, "Truncation order (j + k < N)");
  est_dm->add_option("--delta", est.delta, "Spectral cutoff for eta <= 1/2");
  est_dm->add_flag("--project", est.project, "Project onto physical states");
  est_dm->add_option("--table-cache", est.table_cache, "Pattern table cache file");
  auto* est_w = estimate->add_subcommand("wigner", "Kernel Wigner function estimate");
  est_w->set_help_flag("--help", "Print this help message and exit");
  add_common(est_w);
  est_w->add_option("--h", est.h, "Bandwidth");
  est_w->add_option("--sn", est.sn, "Truncation radius");
  est_w->add_option("--step", est.step, "Grid step (default h/2)");
  est_w->add_option("--half-width", est.half_width, "Grid half width (default s_n)");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "Numeric checks of the special-function bounds");
  verify->add_option("--perturb", ver.perturb, "Multiply every envelope l_{m,n} by this factor")
      ->check(CLI::PositiveNumber);
  verify->add_flag("--skip-norm-growth", ver.skip_norm_growth, "Leave out the slowest check");
  verify->add_option("--out", ver.out, "Report file")->capture_default_str();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Monte Carlo risk curve");
  bench_cmd->add_option("--estimator", bench.estimator, "dm or wigner")
      ->check(CLI::IsMember({"dm", "wigner"}));
  bench_cmd->add_option("--state", bench.state, "State JSON")->required();
  bench_cmd->add_option("--eta", bench.eta, "Detection efficiency")->check(CLI::Range(0.0, 1.0));
  bench_cmd->add_option("--ns", bench.ns, "Sample sizes")->delimiter(',');
  bench_cmd->add_option("--reps", bench.reps, "Replications per sample size")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--B", bench.B, "Class parameter B");
  bench_cmd->add_option("--r", bench.r, "Class parameter r");
  bench_cmd->add_option("--predictor", bench.predictor, "log_n or tuning_power")
      ->check(CLI::IsMember({"log_n", "tuning_power"}));
  bench_cmd->add_option("--step", bench.step, "Wigner grid step (default h/2)");
  bench_cmd->add_option("--prefix", bench.prefix, "Output file prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g.threads > 0) qht::set_thread_limit(g.threads);
    fs::create_directories(g.out_dir);
    if (*make_state) return run_make_state(g, ms);
    if (*simulate) return run_simulate(g, sim);
    if (*est_dm) return run_estimate_dm(g, est);
    if (*est_w) return run_estimate_wigner(g, est);
    if (*verify) return run_verify(g, ver);
    if (*bench_cmd) return run_bench(g, bench);
  } catch (const qht::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const qht::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
