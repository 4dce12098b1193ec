#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "grating/forward.hpp"

using namespace grating;

namespace {
constexpr double kPi = std::numbers::pi;

GratingProfile sinusoid() {
  return GratingProfile::make(2.0 * kPi, 0.0, {}, {0.1});
}
}  // namespace

TEST_CASE("flat profile reflects into the specular order only") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  GratingProfile flat = GratingProfile::flat(2.0 * kPi, 0.0);
  CollocationConfig config;
  config.mode_count = 8;
  for (int trial = 0; trial < 10; ++trial) {
    double k = 0.4 + 2.6 * U(rng);
    double theta = -1.4 + 2.8 * U(rng);
    ForwardSolution sol =
        solve_dirichlet(flat, PlaneWave::make(k, theta), config);
    CHECK(std::abs(sol.expansion.coeff(0) - cplx(-1.0, 0.0)) < 1e-10);
    for (int n = -8; n <= 8; ++n)
      if (n != 0) CHECK(std::abs(sol.expansion.coeff(n)) < 1e-10);
    CHECK(sol.energy_defect < 1e-12);
    CHECK(sol.boundary_residual < 1e-10);
  }
}

TEST_CASE("raised mirror picks up the image phase") {
  double c = 0.37;
  GratingProfile raised = GratingProfile::flat(2.0 * kPi, c);
  PlaneWave wave = PlaneWave::make(1.9, -0.52);
  CollocationConfig config;
  config.mode_count = 8;
  ForwardSolution sol = solve_dirichlet(raised, wave, config);
  double beta0 = std::sqrt(wave.k * wave.k - wave.alpha * wave.alpha);
  cplx expect = -std::exp(cplx(0.0, -2.0 * beta0 * c));
  CHECK(std::abs(sol.expansion.coeff(0) - expect) < 1e-10);
  for (int n = -8; n <= 8; ++n)
    if (n != 0) CHECK(std::abs(sol.expansion.coeff(n)) < 1e-10);
}

TEST_CASE("shallow sinusoid: energy balance and self-consistency") {
  PlaneWave wave = PlaneWave::make(1.5, 0.3);
  CollocationConfig coarse;
  coarse.mode_count = 16;
  ForwardSolution a = solve_dirichlet(sinusoid(), wave, coarse);
  CHECK(a.energy_defect < 1e-8);
  CHECK(a.boundary_residual < 1e-6);

  CollocationConfig fine;
  fine.mode_count = 24;
  fine.collocation_count = 4 * 24;
  ForwardSolution b = solve_dirichlet(sinusoid(), wave, fine);
  double drift = 0.0;
  for (int n = -16; n <= 16; ++n)
    drift = std::max(drift,
                     std::abs(a.expansion.coeff(n) - b.expansion.coeff(n)));
  CHECK(drift < 1e-8);
}

TEST_CASE("solve scales linearly with the incident amplitude") {
  PlaneWave wave = PlaneWave::make(1.5, 0.3);
  CollocationConfig config;
  config.mode_count = 12;
  ForwardSolution base = solve_dirichlet(sinusoid(), wave, config);
  double scale = 1.9;
  CollocationConfig scaled = config;
  scaled.incident_scale = scale;
  ForwardSolution big = solve_dirichlet(sinusoid(), wave, scaled);
  for (int n = -12; n <= 12; ++n)
    CHECK(std::abs(big.expansion.coeff(n) -
                   scale * base.expansion.coeff(n)) < 1e-10);
}

TEST_CASE("doubling resolution does not worsen the residual") {
  PlaneWave wave = PlaneWave::make(1.5, 0.3);
  CollocationConfig c8;
  c8.mode_count = 8;
  CollocationConfig c16;
  c16.mode_count = 16;
  ForwardSolution low = solve_dirichlet(sinusoid(), wave, c8);
  ForwardSolution high = solve_dirichlet(sinusoid(), wave, c16);
  CHECK(high.boundary_residual <= low.boundary_residual +
                                      c16.residual_tolerance);
}

TEST_CASE("boundary_residual validates dense_count") {
  PlaneWave wave = PlaneWave::make(1.5, 0.3);
  CollocationConfig config;
  config.mode_count = 8;
  ForwardSolution sol = solve_dirichlet(sinusoid(), wave, config);
  CHECK_THROWS_AS(
      boundary_residual(sol.expansion, sinusoid(), wave, 0), Error);
}

TEST_CASE("multi-angle batch") {
  CollocationConfig config;
  config.mode_count = 12;

  SUBCASE("one angle reproduces the single solve") {
    auto batch = solve_multi_angle(sinusoid(), 1.5, {0.3}, config);
    REQUIRE(batch.size() == 1);
    REQUIRE(batch[0].solution.has_value());
    ForwardSolution single =
        solve_dirichlet(sinusoid(), PlaneWave::make(1.5, 0.3), config);
    for (int n = -12; n <= 12; ++n)
      CHECK(std::abs(batch[0].solution->expansion.coeff(n) -
                     single.expansion.coeff(n)) < 1e-14);
  }

  SUBCASE("eight angles all pass the energy gate") {
    std::vector<double> angles = {-1.1, -0.8, -0.5, -0.2, 0.1, 0.4, 0.7, 1.0};
    auto batch = solve_multi_angle(sinusoid(), 1.5, angles, config);
    REQUIRE(batch.size() == angles.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      CHECK(batch[i].theta == angles[i]);
      REQUIRE(batch[i].solution.has_value());
      CHECK(batch[i].solution->energy_defect < 1e-8);
    }
  }

  SUBCASE("duplicate angles are rejected") {
    CHECK_THROWS_AS(solve_multi_angle(sinusoid(), 1.5, {0.2, 0.2}, config),
                    Error);
  }

  SUBCASE("per-angle failures are collected, not thrown") {
    CollocationConfig strict = config;
    strict.residual_tolerance = 1e-30;  // force ResidualExceeded per angle
    auto batch = solve_multi_angle(sinusoid(), 1.5, {0.1, 0.5}, strict);
    REQUIRE(batch.size() == 2);
    for (const auto& outcome : batch) {
      CHECK_FALSE(outcome.solution.has_value());
      CHECK(outcome.code == ErrorCode::ResidualExceeded);
    }
  }
}

TEST_CASE("two-period fixture") {
  CounterexampleFixture fx = counterexample_fixture();

  SUBCASE("wave parameters") {
    CHECK(fx.wave.k == 2.0);
    CHECK(fx.wave.theta == doctest::Approx(-kPi / 6.0));
    CHECK(fx.wave.alpha == doctest::Approx(-1.0).epsilon(1e-14));
  }

  SUBCASE("coefficient lists match the two reindexings") {
    CHECK(fx.expansion1.grid.period == doctest::Approx(2.0 * kPi));
    CHECK(fx.expansion1.coeff(2) == cplx(1.0, 0.0));
    CHECK(fx.expansion1.coeff(-1) == cplx(-1.0, 0.0));
    CHECK(fx.expansion1.coeff(3) == cplx(-1.0, 0.0));
    CHECK(fx.expansion2.grid.period == doctest::Approx(4.0 * kPi));
    CHECK(fx.expansion2.coeff(4) == cplx(1.0, 0.0));
    CHECK(fx.expansion2.coeff(-2) == cplx(-1.0, 0.0));
    CHECK(fx.expansion2.coeff(6) == cplx(-1.0, 0.0));
  }

  SUBCASE("total field vanishes on both zigzags") {
    for (int j = 0; j < 1000; ++j) {
      double x1a = fx.profile1.period * j / 1000.0;
      double x1b = fx.profile2.period * j / 1000.0;
      CHECK(std::abs(fx.total_field(x1a, fx.profile1(x1a))) < 1e-12);
      CHECK(std::abs(fx.total_field(x1b, fx.profile2(x1b))) < 1e-12);
    }
  }

  SUBCASE("boundary residual of the expansions on the zigzags") {
    CHECK(boundary_residual(fx.expansion1, fx.profile1, fx.wave, 1000) <
          1e-12);
    CHECK(boundary_residual(fx.expansion2, fx.profile2, fx.wave, 1000) <
          1e-12);
  }

  SUBCASE("the two expansions agree pointwise above the curves") {
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        double x1 = -2.0 * kPi + 4.0 * kPi * i / 9.0;
        double x2 = 3.0 + 2.0 * j / 9.0;
        cplx u1 = fx.expansion1.value(x1, x2);
        cplx u2 = fx.expansion2.value(x1, x2);
        CHECK(std::abs(u1 - u2) < 1e-12);
        cplx total = fx.wave.field(x1, x2) + u1;
        CHECK(std::abs(total - fx.total_field(x1, x2)) < 1e-12);
      }
    }
  }

  SUBCASE("minimum periods differ: profile2 is not 2 pi periodic") {
    double x = 0.5 * kPi;
    CHECK(std::abs(fx.profile2(x) - fx.profile2(x + 2.0 * kPi)) > 1.0);
    CHECK(fx.profile2(x) ==
          doctest::Approx(fx.profile2(x + 4.0 * kPi)).epsilon(1e-12));
  }
}

TEST_CASE("collocation config validation") {
  CollocationConfig bad;
  bad.mode_count = 8;
  bad.collocation_count = 10;  // < 2N + 1
  PlaneWave wave = PlaneWave::make(1.0, 0.1);
  CHECK_THROWS_AS(solve_dirichlet(sinusoid(), wave, bad), Error);
}

TEST_CASE("deep profile triggers a diagnostic guard") {
  GratingProfile deep = GratingProfile::make(2.0 * kPi, 0.0, {}, {2.5});
  PlaneWave wave = PlaneWave::make(1.5, 0.3);
  CollocationConfig config;
  config.mode_count = 20;
  config.condition_cap = 1e6;
  try {
    ForwardSolution sol = solve_dirichlet(deep, wave, config);
    FAIL("deep profile unexpectedly accepted with residual ",
         sol.boundary_residual);
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::IllConditioned ||
           e.code() == ErrorCode::ResidualExceeded));
  }
}
