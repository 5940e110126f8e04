#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qht/sampler.hpp"
#include "qht/state.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run run_cli(const fs::path& dir, const std::string& args) {
  const fs::path log = dir / "last.log";
  const std::string cmd = std::string(QHT_CLI_PATH) + " --out-dir " + dir.string() + " " + args +
                          " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream s;
  s << in.rdbuf();
  r.output = s.str();
  return r;
}

json load(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("qht_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("make-state") {
  TempDir tmp;
  Run r = run_cli(tmp.path, "make-state --kind fock --k 0 --dim 4 --out vac.json");
  REQUIRE(r.code == 0);
  const qht::DensityMatrix vac = qht::read_state_file(tmp.path / "vac.json");
  CHECK(vac.dim() == 4);
  CHECK(vac.trace_deficit() == 0.0);

  r = run_cli(tmp.path, "make-state --kind coherent --alpha 0.5 --dim 12 --out coh.json");
  REQUIRE(r.code == 0);
  const json m = load(tmp.path / "make-state.manifest.json");
  CHECK(m["trace_deficit"].get<double>() < 1e-9);
  CHECK(m["version"].get<std::string>() == QHT_VERSION);
  CHECK(m["parameters"]["dim"] == 12);

  r = run_cli(tmp.path, "make-state --kind fock --k 0 --dim 0");
  CHECK(r.code == 2);
  CHECK(r.output.find("--dim") != std::string::npos);

  r = run_cli(tmp.path, "make-state --kind fock --k 5 --dim 3");
  CHECK(r.code == 2);
  CHECK(r.output.find("dim >= 6") != std::string::npos);

  CHECK(run_cli(tmp.path, "no-such-command").code == 2);
}

TEST_CASE("simulate") {
  TempDir tmp;
  REQUIRE(run_cli(tmp.path, "make-state --kind fock --k 0 --dim 2 --out vac.json").code == 0);
  const std::string state = (tmp.path / "vac.json").string();
  REQUIRE(run_cli(tmp.path, "--seed 7 simulate --state " + state + " --n 2000 --eta 0.8 --out a.csv").code == 0);
  REQUIRE(run_cli(tmp.path, "--seed 7 simulate --state " + state + " --n 2000 --eta 0.8 --out b.csv").code == 0);
  CHECK(slurp(tmp.path / "a.csv") == slurp(tmp.path / "b.csv"));
  REQUIRE(run_cli(tmp.path, "--seed 7 --threads 1 simulate --state " + state +
                            " --n 2000 --eta 0.8 --out c.csv").code == 0);
  CHECK(slurp(tmp.path / "a.csv") == slurp(tmp.path / "c.csv"));

  const std::size_t n = 100000;
  REQUIRE(run_cli(tmp.path, "--seed 3 simulate --state " + state + " --n 100000 --eta 1.0 --out big.csv").code == 0);
  const double var = load(tmp.path / "simulate.manifest.json")["summary"]["var_y"].get<double>();
  const double se = std::sqrt(2.0 / n) * 0.5;
  CHECK(std::abs(var - 0.5) < 3 * se);
  const qht::Dataset d = qht::read_dataset(tmp.path / "big.csv");
  CHECK(d.size() == n);
  CHECK(d.seed == 3);

  CHECK(run_cli(tmp.path, "simulate --state " + (tmp.path / "missing.json").string()).code == 2);
}

TEST_CASE("estimate") {
  TempDir tmp;
  REQUIRE(run_cli(tmp.path, "make-state --kind fock --k 0 --dim 2 --out vac.json").code == 0);
  const std::string state = (tmp.path / "vac.json").string();
  REQUIRE(run_cli(tmp.path, "--seed 1 simulate --state " + state + " --n 3000 --eta 1.0 --out d1.csv").code == 0);
  const std::string d1 = (tmp.path / "d1.csv").string();

  Run r = run_cli(tmp.path, "estimate dm --data " + d1 + " --auto --B 1 --r 2 --out rho.json");
  REQUIRE(r.code == 0);
  const json m = load(tmp.path / "estimate-dm.manifest.json");
  const int N = static_cast<int>(std::floor(std::log(3000.0) / 2.0));
  CHECK(m["tuning"]["N"].get<int>() == N);
  const qht::DensityMatrix raw = qht::read_state_file(tmp.path / "rho.json");
  CHECK(raw.raw());
  CHECK(raw.dim() == N);

  r = run_cli(tmp.path, "estimate dm --data " + d1 + " --N 4 --project --out proj.json");
  REQUIRE(r.code == 0);
  const qht::DensityMatrix proj = qht::read_state_file(tmp.path / "proj.json");
  CHECK_FALSE(proj.raw());
  CHECK(proj.check_physical().physical);

  r = run_cli(tmp.path, "estimate wigner --data " + d1 + " --h 0.2 --sn 5 --out w.csv");
  REQUIRE(r.code == 0);
  std::ifstream in(tmp.path / "w.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "q,p,w");
  std::size_t outside = 0, inside_nonzero = 0;
  while (std::getline(in, line)) {
    double q, p, w;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &q, &p, &w) == 3);
    if (q * q + p * p > 25.0 + 1e-9) {
      CHECK(w == 0.0);
      ++outside;
    } else if (w != 0.0) {
      ++inside_nonzero;
    }
  }
  CHECK(outside > 0);
  CHECK(inside_nonzero > 0);

  CHECK(run_cli(tmp.path, "estimate dm --data " + (tmp.path / "none.csv").string() + " --N 2").code == 2);
  CHECK(run_cli(tmp.path, "estimate dm --data " + d1).code == 2);
}

TEST_CASE("verify") {
  TempDir tmp;
  Run r = run_cli(tmp.path, "verify --skip-norm-growth");
  CHECK(r.code == 0);
  const json report = load(tmp.path / "verify.json");
  CHECK(report["passed"].get<bool>());
  for (const auto& c : report["checks"]) {
    CHECK(c.contains("name"));
    CHECK(c.contains("margin"));
  }
  r = run_cli(tmp.path, "verify --skip-norm-growth --perturb 1.5");
  CHECK(r.code == 3);
  CHECK_FALSE(load(tmp.path / "verify.json")["passed"].get<bool>());
}

TEST_CASE("bench") {
  TempDir tmp;
  REQUIRE(run_cli(tmp.path, "make-state --kind fock --k 0 --dim 2 --out vac.json").code == 0);
  Run r = run_cli(tmp.path, "--seed 4 bench --estimator dm --state " + (tmp.path / "vac.json").string() +
                            " --eta 1 --ns 300,3000 --reps 4");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(tmp.path / "risk.json"));
  CHECK(fs::exists(tmp.path / "risk.csv"));
  CHECK(fs::exists(tmp.path / "plot_risk.py"));
  CHECK(load(tmp.path / "risk.json")["cells"].size() == 2);
  const std::string first = slurp(tmp.path / "risk.csv");
  REQUIRE(run_cli(tmp.path, "--seed 4 bench --estimator dm --state " + (tmp.path / "vac.json").string() +
                            " --eta 1 --ns 300,3000 --reps 4").code == 0);
  CHECK(slurp(tmp.path / "risk.csv") == first);
}
