#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "qht/error.hpp"
#include "qht/state.hpp"

using namespace qht;

namespace {

double poisson_tail(double mean, int dim) {
  double p = std::exp(-mean), kept = 0.0;
  for (int k = 0; k < dim; ++k) {
    kept += p;
    p *= mean / (k + 1);
  }
  return 1.0 - kept;
}

}  // namespace

TEST_SUITE("state") {
  TEST_CASE("factories") {
    const auto vac = make_state(state_kind::Fock{0}, 4);
    const auto c0 = make_state(state_kind::Coherent{{0.0, 0.0}}, 4);
    CHECK(dm_distance_sq(vac, c0) == 0.0);

    const auto f1 = make_state(state_kind::Fock{1}, 4);
    CHECK(f1.trace_deficit() == 0.0);
    const Eigen::VectorXd ev = f1.eigenvalues();
    CHECK(ev.maxCoeff() == doctest::Approx(1.0));
    CHECK(ev.sum() == doctest::Approx(1.0));
    CHECK(ev.minCoeff() == doctest::Approx(0.0));

    const auto coh = make_state(state_kind::Coherent{{0.5, 0.0}}, 12);
    CHECK(coh.trace_deficit() < 1e-9);
    CHECK(coh.trace_deficit() == doctest::Approx(poisson_tail(0.25, 12)).epsilon(1e-3).scale(1e-16));
    CHECK(1.0 - hs_norm_sq(coh) < 1e-8);
  }

  TEST_CASE("coherent entries") {
    const Complex a(0.3, -0.4);
    const auto rho = make_state(state_kind::Coherent{a}, 10);
    for (int m = 0; m < 10; ++m)
      for (int n = 0; n < 10; ++n) {
        const Complex want = std::exp(-std::norm(a)) * std::pow(a, m) * std::pow(std::conj(a), n) /
                             std::sqrt(std::tgamma(m + 1.0) * std::tgamma(n + 1.0));
        CHECK(std::abs(rho(m, n) - want) < 1e-15);
      }
  }

  TEST_CASE("thermal is geometric") {
    const auto rho = make_state(state_kind::Thermal{0.1}, 10);
    for (int k = 0; k < 10; ++k)
      CHECK(rho(k, k).real() == doctest::Approx(std::pow(0.1, k) / std::pow(1.1, k + 1)));
  }

  TEST_CASE("capacity errors carry the needed dimension") {
    try {
      make_state(state_kind::Fock{5}, 3);
      FAIL("expected CapacityError");
    } catch (const CapacityError& e) {
      CHECK(e.required() == 6);
    }
    try {
      make_state(state_kind::Coherent{{2.0, 0.0}}, 5);
      FAIL("expected CapacityError");
    } catch (const CapacityError& e) {
      const int need = static_cast<int>(e.required());
      CHECK(poisson_tail(4.0, need) < 1e-6);
      CHECK(poisson_tail(4.0, need - 1) >= 1e-6);
      CHECK_NOTHROW(make_state(state_kind::Coherent{{2.0, 0.0}}, need));
    }
    try {
      make_state(state_kind::Thermal{1.0}, 5);
      FAIL("expected CapacityError");
    } catch (const CapacityError& e) {
      const int need = static_cast<int>(e.required());
      CHECK(std::pow(0.5, need) < 1e-6);
      CHECK(std::pow(0.5, need - 1) >= 1e-6);
    }
    CHECK_THROWS_AS(make_state(state_kind::Fock{0}, 0), DomainError);
  }

  TEST_CASE("class membership") {
    oracle::Gen gen(1);
    for (int i = 0; i < 10; ++i) {
      const auto cls = StateClass::make(gen.uniform(0.1, 3.0), gen.uniform(0.2, 2.0));
      CHECK(class_check(make_state(state_kind::Fock{0}, 3), cls).member);
    }
    const auto f1 = class_check(make_state(state_kind::Fock{1}, 4), StateClass::make(1.0, 2.0));
    CHECK_FALSE(f1.member);
    CHECK(f1.worst_cell == std::pair{1, 1});
    CHECK(f1.margin == doctest::Approx(std::exp(-2.0) - 1.0));
    CHECK(class_check(make_state(state_kind::Thermal{0.1}, 10), StateClass::make(0.5, 2.0)).member);
  }

  TEST_CASE("beta for r = 2") {
    const auto cls = StateClass::make(1.0, 2.0);
    CHECK(cls.beta == doctest::Approx(0.25));
    CHECK_THROWS_AS(StateClass::make(1.0, 2.0, 0.3), DomainError);
    CHECK_THROWS_AS(StateClass::make(1.0, 2.5), DomainError);
    CHECK_THROWS_AS(StateClass::make(-1.0, 1.0), DomainError);
    CHECK(StateClass::make(2.0, 1.0).beta == doctest::Approx(1.8));
  }

  TEST_CASE("norms") {
    CHECK(hs_norm_sq(make_state(state_kind::Fock{0}, 3)) == 1.0);
    CHECK(dm_distance_sq(make_state(state_kind::Fock{0}, 3), make_state(state_kind::Fock{1}, 3)) ==
          2.0);
    CHECK_THROWS_AS(dm_distance_sq(make_state(state_kind::Fock{0}, 3),
                                   make_state(state_kind::Fock{0}, 4)),
                    DomainError);
  }

  TEST_CASE("hermiticity is enforced from the upper triangle") {
    oracle::Gen gen(9);
    Eigen::MatrixXcd m = gen.state(5).entries();
    m(3, 1) += Complex(0.0, 1e-14);
    const DensityMatrix rho(m, true);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) CHECK(rho(i, j) == std::conj(rho(j, i)));
    CHECK(rho(1, 3) == m(1, 3));
    m(3, 1) += Complex(0.0, 1e-3);
    CHECK_THROWS_AS(DensityMatrix(m, true), DomainError);
  }

  TEST_CASE("physical invariants are checked") {
    Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(2, 2);
    bad(0, 0) = 1.5;
    bad(1, 1) = -0.5;
    CHECK_THROWS_AS(DensityMatrix{bad}, DomainError);
    CHECK_NOTHROW(DensityMatrix(bad, true));
    bad(1, 1) = 0.0;
    CHECK_THROWS_AS(DensityMatrix{bad}, DomainError);
  }

  TEST_CASE("mixtures") {
    const auto mix = make_state(
        state_kind::Mixture{{{0.25, make_state(state_kind::Fock{0}, 2)},
                             {0.75, make_state(state_kind::Fock{2}, 3)}}},
        4);
    CHECK(mix(0, 0).real() == 0.25);
    CHECK(mix(2, 2).real() == 0.75);
    CHECK(mix.trace_deficit() == doctest::Approx(0.0));
  }

  TEST_CASE("json round trip is exact") {
    oracle::Gen gen(21);
    const auto dir = std::filesystem::temp_directory_path() / "qht_state_test";
    std::filesystem::create_directories(dir);
    for (int trial = 0; trial < 5; ++trial) {
      DensityMatrix rho = gen.state(gen.integer(1, 8));
      rho.set_state_class(StateClass::make(0.7, 1.5));
      const auto path = dir / ("s" + std::to_string(trial) + ".json");
      write_state_file(path, rho);
      const DensityMatrix back = read_state_file(path);
      CHECK(back.dim() == rho.dim());
      CHECK((back.entries() - rho.entries()).cwiseAbs().maxCoeff() == 0.0);
      REQUIRE(back.state_class().has_value());
      CHECK(back.state_class()->B == 0.7);
      CHECK(back.state_class()->r == 1.5);
    }
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("resized pads with zeros") {
    const auto rho = make_state(state_kind::Fock{1}, 3).resized(6);
    CHECK(rho.dim() == 6);
    CHECK(rho(1, 1).real() == 1.0);
    CHECK(rho(5, 5) == Complex(0.0));
  }
}
