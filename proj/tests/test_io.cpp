#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "grating/io.hpp"

using namespace grating;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("coefficient table round-trips, incident row uses `inc`") {
  PlaneWave wave = PlaneWave::make(1.7, -0.33);
  RayleighExpansion e = RayleighExpansion::make(
      ModeGrid::make(wave, 2.0 * kPi, 3),
      {{-2, cplx(0.25, -1.5)}, {0, cplx(-0.99, 0.01)}, {3, cplx(1e-9, 2e-7)}},
      true, 1.25);

  std::stringstream ss;
  io::write_coefficient_table(ss, e);
  std::string text = ss.str();
  CHECK(text.find("n,re_A,im_A,alpha_n,re_beta_n,im_beta_n,propagating,"
                  "anomalous") != std::string::npos);
  CHECK(text.find("inc,") != std::string::npos);

  std::stringstream in(text);
  RayleighExpansion back = io::read_coefficient_table(in);
  CHECK(back.grid.k == e.grid.k);
  CHECK(back.grid.alpha0 == e.grid.alpha0);
  CHECK(back.grid.period == e.grid.period);
  CHECK(back.grid.window == e.grid.window);
  CHECK(back.reference_height == e.reference_height);
  CHECK(back.includes_incident == e.includes_incident);
  REQUIRE(back.coeffs.size() == e.coeffs.size());
  for (const auto& [n, a] : e.coeffs) CHECK(back.coeff(n) == a);
}

TEST_CASE("coefficient table rejects malformed input") {
  std::stringstream missing_header("1,2,3\n");
  CHECK_THROWS_AS(io::read_coefficient_table(missing_header), Error);

  std::stringstream bad_row(
      "# k = 1\n# alpha0 = 0\n# period = 6.28\n# window = 1\n"
      "# reference_height = 0\n# includes_incident = 0\n"
      "n,re_A,im_A,alpha_n,re_beta_n,im_beta_n,propagating,anomalous\n"
      "0,not_a_number,0,0,1,0,1,0\n");
  CHECK_THROWS_AS(io::read_coefficient_table(bad_row), Error);
}

TEST_CASE("profile files round-trip") {
  GratingProfile p =
      GratingProfile::make(3.5, 0.25, {0.1, 0.0, -0.02}, {0.3});
  std::stringstream ss;
  io::write_profile(ss, p);
  GratingProfile back = io::read_profile(ss);
  CHECK(back.period == p.period);
  CHECK(back.offset == p.offset);
  REQUIRE(back.cos_coeffs.size() == 3);
  CHECK(back.cos_coeffs[2] == p.cos_coeffs[2]);
  REQUIRE(back.sin_coeffs.size() >= 1);
  CHECK(back.sin_coeffs[0] == p.sin_coeffs[0]);

  std::stringstream bad("period = 2\nwobble = 3\n");
  CHECK_THROWS_AS(io::read_profile(bad), Error);
  std::stringstream no_period("offset = 1\n");
  CHECK_THROWS_AS(io::read_profile(no_period), Error);
}

TEST_CASE("intensity grids round-trip in both formats") {
  PlaneWave wave = PlaneWave::make(1.5, 0.3);
  std::vector<double> x1 = {0.0, 0.5, 1.0, 1.5};
  std::vector<double> x2 = {1.0, 1.25, 1.5};
  Eigen::MatrixXd values(4, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) values(i, j) = 1.0 + i * 0.1 + j * 0.01;
  PhaselessSamples s = PhaselessSamples::make(x1, x2, values, wave,
                                              2.0 * kPi, 0.5);

  for (bool dense : {false, true}) {
    std::stringstream ss;
    io::write_intensity_grid(ss, s, dense);
    PhaselessSamples back =
        io::read_intensity_grid(ss, wave, 2.0 * kPi, 0.5);
    REQUIRE(back.x1.size() == x1.size());
    REQUIRE(back.x2.size() == x2.size());
    for (std::size_t i = 0; i < x1.size(); ++i)
      CHECK(back.x1[i] == doctest::Approx(x1[i]).epsilon(1e-15));
    CHECK((back.intensity - s.intensity).norm() == 0.0);
  }
}

TEST_CASE("line samples round-trip") {
  std::vector<double> x1 = {0.0, 0.3, 0.9};
  std::vector<cplx> u = {{1.0, -0.5}, {0.0, 2.0}, {-3.0, 0.25}};
  std::stringstream ss;
  io::write_line_samples(ss, x1, u);
  std::vector<double> x1b;
  std::vector<cplx> ub;
  io::read_line_samples(ss, x1b, ub);
  REQUIRE(x1b.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(x1b[i] == x1[i]);
    CHECK(ub[i] == u[i]);
  }
}

TEST_CASE("dispersion CSV round-trips with self-describing header") {
  DispersionCurve curve;
  curve.alpha_grid = {-0.25, 0.0, 0.25, 0.5};
  curve.bands.resize(4, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) curve.bands(i, j) = i + 10.0 * j + 0.5;

  std::stringstream ss;
  io::write_dispersion_csv(ss, curve, {{"h", "3.14"}});
  std::string text = ss.str();
  CHECK(text.find("# h = 3.14") != std::string::npos);
  CHECK(text.find("alpha,K_1,K_2,K_3") != std::string::npos);

  std::stringstream in(text);
  DispersionCurve back = io::read_dispersion_csv(in);
  REQUIRE(back.alpha_grid.size() == 4);
  CHECK((back.bands - curve.bands).norm() == 0.0);
}

TEST_CASE("json report shapes") {
  PlaneWave wave = PlaneWave::make(2.0, -kPi / 6.0);
  RayleighExpansion e = RayleighExpansion::make(
      ModeGrid::make(wave, 2.0 * kPi, 2), {{0, cplx(-1.0, 0.0)}}, false, 0.1);
  ForwardSolution sol;
  sol.expansion = e;
  sol.boundary_residual = 1e-14;
  sol.energy_defect = 1e-15;
  sol.condition = 3.0;

  nlohmann::json j = io::solution_json(sol, wave);
  CHECK(j["diagnostics"]["residual"] == 1e-14);
  CHECK(j["params"]["k"] == 2.0);
  CHECK(j["table"].is_array());

  MuSpectrum spec;
  spec.k = 2.0;
  spec.real_mu = {-0.5, 0.5};
  spec.multiplicity = {1, 1};
  spec.residuals = {1e-12, 1e-12};
  spec.complex_mu = {cplx(0.1, 2.0)};
  nlohmann::json mj = io::mu_spectrum_json(spec);
  CHECK(mj["real_mu"].size() == 2);
  CHECK(mj["complex_mu"][0]["im"] == 2.0);
}
