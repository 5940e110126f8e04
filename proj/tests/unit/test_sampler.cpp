#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "qht/error.hpp"
#include "qht/parallel.hpp"
#include "qht/sampler.hpp"

using namespace qht;
using oracle::kPi;

namespace {

double sample_var(const Dataset& d) {
  double mean = 0.0;
  for (const auto& r : d.records) mean += r.y;
  mean /= static_cast<double>(d.size());
  double v = 0.0;
  for (const auto& r : d.records) v += (r.y - mean) * (r.y - mean);
  return v / static_cast<double>(d.size() - 1);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("vacuum data is N(0, 1/2) for every eta") {
    const auto vac = make_state(state_kind::Fock{0}, 3);
    const std::size_t n = 100000;
    const double se = std::sqrt(2.0 / n) * 0.5;
    std::uint64_t seed = 1;
    for (double eta : {1.0, 0.8, 0.4}) {
      const Dataset d = sample(vac, NoiseModel::make(eta), n, seed++);
      CHECK(std::abs(sample_var(d) - 0.5) < 3.0 * se);
    }
  }

  TEST_CASE("fixed seed is bit-identical across thread counts") {
    const auto coh = make_state(state_kind::Coherent{{0.5, 0.0}}, 12);
    const int saved = thread_limit();
    set_thread_limit(1);
    const Dataset a = sample(coh, NoiseModel::make(0.8), 5000, 77);
    set_thread_limit(4);
    const Dataset b = sample(coh, NoiseModel::make(0.8), 5000, 77);
    set_thread_limit(saved);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.records[i].y == b.records[i].y);
      CHECK(a.records[i].phi == b.records[i].phi);
    }
    const Dataset c = sample(coh, NoiseModel::make(0.8), 5000, 78);
    CHECK(c.records[0].y != a.records[0].y);
  }

  TEST_CASE("phase is uniform (Kolmogorov-Smirnov)") {
    const std::size_t n = 100000;
    const Dataset d = sample(make_state(state_kind::Fock{1}, 3), NoiseModel::make(0.9), n, 5);
    std::vector<double> phi;
    for (const auto& r : d.records) {
      REQUIRE(r.phi >= 0.0);
      REQUIRE(r.phi <= kPi);
      phi.push_back(r.phi / kPi);
    }
    std::sort(phi.begin(), phi.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ks = std::max({ks, std::abs(phi[i] - double(i) / n), std::abs(phi[i] - double(i + 1) / n)});
    }
    CHECK(ks < 1.63 / std::sqrt(double(n)));
  }

  TEST_CASE("latent second moment matches quadrature") {
    oracle::Gen gen(31);
    std::vector<DensityMatrix> states = {make_state(state_kind::Coherent{{0.6, -0.3}}, 14),
                                         make_state(state_kind::Fock{2}, 4), gen.state(5)};
    for (const auto& rho : states) {
      SampleOptions opt;
      opt.keep_latent = true;
      const std::size_t n = 40000;
      const Dataset d = sample(rho, NoiseModel::make(0.7), n, 11, "", opt);
      REQUIRE(d.latent.size() == n);
      double m2 = 0.0, m4 = 0.0;
      for (double x : d.latent) {
        m2 += x * x;
        m4 += x * x * x * x;
      }
      m2 /= n;
      m4 /= n;
      const double se = std::sqrt((m4 - m2 * m2) / n);
      const double want =
          oracle::gk(
              [&](double phi) {
                return oracle::gk([&](double x) { return x * x * quadrature_density(rho, x, phi); },
                                  -12.0, 12.0, 1e-10);
              },
              0.0, kPi, 1e-10) /
          kPi;
      CHECK(std::abs(m2 - want) < 4.0 * se);
    }
  }

  TEST_CASE("acceptance rate for canonical states") {
    for (int dim : {8, 12})
      for (auto& [id, rho] : canonical_states(dim)) {
        const QuadratureSampler s(rho, id);
        CHECK(s.acceptance_rate() >= 0.1);
      }
  }

  TEST_CASE("csv round trip is exact") {
    const auto dir = std::filesystem::temp_directory_path() / "qht_sampler_test";
    std::filesystem::create_directories(dir);
    const Dataset d =
        sample(make_state(state_kind::Coherent{{0.5, 0.1}}, 12), NoiseModel::make(0.6), 3000, 4, "c");
    write_dataset(dir / "a.csv", d);
    const Dataset back = read_dataset(dir / "a.csv");
    CHECK(back.eta == d.eta);
    CHECK(back.seed == d.seed);
    CHECK(back.source_state_id == "c");
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(back.records[i].y == d.records[i].y);
      CHECK(back.records[i].phi == d.records[i].phi);
    }
    write_dataset(dir / "b.csv", back);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK_THROWS_AS(read_dataset(dir / "missing.csv"), IoError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("preconditions") {
    const auto vac = make_state(state_kind::Fock{0}, 2);
    CHECK_THROWS_AS(sample(vac, NoiseModel::make(1.0), 0, 1), DomainError);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
    m(0, 0) = 0.9;
    CHECK_THROWS_AS(sample(DensityMatrix(m, true), NoiseModel::make(1.0), 10, 1), DomainError);
  }
}
