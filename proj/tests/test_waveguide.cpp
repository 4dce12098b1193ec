#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "grating/waveguide.hpp"

using namespace grating;

namespace {
constexpr double kPi = std::numbers::pi;

WaveguideCell strip_cell(double h, int P = 5, int Q = 14) {
  return WaveguideCell::make(GratingProfile::flat(2.0 * kPi, 0.0),
                             GratingProfile::flat(2.0 * kPi, h), P, Q);
}

WaveguideCell curved_cell(int P = 6, int Q = 8) {
  return WaveguideCell::make(
      GratingProfile::make(2.0 * kPi, 0.0, {0.2}, {}),
      GratingProfile::make(2.0 * kPi, 2.0, {}, {0.2}), P, Q);
}

// Brute-force enumeration of the strip mu-eigenvalues from the analytic
// dispersion (mu k + n)^2 + (m pi / h)^2 = k^2, the oracle for both the
// pencil route and the dispersion route.
std::vector<double> strip_mu_oracle(double h, double k) {
  std::vector<double> mus;
  for (int m = 1; m * kPi / h <= k; ++m) {
    double root = std::sqrt(k * k - std::pow(m * kPi / h, 2));
    for (int n = -64; n <= 64; ++n)
      for (double s : {1.0, -1.0}) {
        double mu = (s * root - n) / k;
        if (mu > -1.0 && mu < 1.0) mus.push_back(mu);
      }
  }
  std::sort(mus.begin(), mus.end());
  std::vector<double> out;
  for (double mu : mus)
    if (out.empty() || mu - out.back() > 1e-9) out.push_back(mu);
  return out;
}

void check_set_match(const std::vector<double>& got,
                     const std::vector<double>& expect, double tol) {
  REQUIRE(got.size() == expect.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(std::abs(got[i] - expect[i]) < tol);
}

std::vector<double> uniform_zone_grid(int n) {
  // (-1/2, 1/2], includes both 0 and 1/2 for even n
  std::vector<double> grid(n);
  for (int i = 1; i <= n; ++i) grid[i - 1] = -0.5 + static_cast<double>(i) / n;
  return grid;
}
}  // namespace

TEST_CASE("strip pencil separates: longitudinal modes never couple") {
  double h = kPi;
  double k = 2.0;
  int P = 4, Q = 4;
  QuadraticPencil pencil = assemble_pencil(strip_cell(h, P, Q), k);
  REQUIRE(pencil.dim == (2 * P + 1) * Q);
  CHECK((pencil.B - pencil.B.adjoint()).norm() < 1e-12 * pencil.B.norm());
  for (int p = -P; p <= P; ++p)
    for (int pp = -P; pp <= P; ++pp) {
      if (p == pp) continue;
      for (int q = 1; q <= Q; ++q)
        for (int qq = 1; qq <= Q; ++qq) {
          int i = (p + P) * Q + (q - 1);
          int j = (pp + P) * Q + (qq - 1);
          CHECK(std::abs(pencil.B(i, j)) < 1e-12);
          CHECK(std::abs(pencil.C(i, j)) < 1e-12);
        }
    }
  // the per-mode quadratic (mu k + p)^2 + (q pi / h)^2 = k^2 is validated
  // through the analytic eigenproblem in the spectrum tests below
}

TEST_CASE("curved-cell pencil is Hermitian with positive definite C") {
  QuadraticPencil pencil = assemble_pencil(curved_cell(), 2.0);
  CHECK((pencil.B - pencil.B.adjoint()).norm() / pencil.B.norm() < 1e-10);
  CHECK((pencil.C - pencil.C.adjoint()).norm() / pencil.C.norm() < 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pencil.C,
                                                     Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("pencil operators scale as O(k) and O(k^2) for small k") {
  WaveguideCell cell = curved_cell(4, 4);
  QuadraticPencil p1 = assemble_pencil(cell, 1e-6);
  QuadraticPencil p2 = assemble_pencil(cell, 2e-6);
  CHECK(p2.B.norm() / p1.B.norm() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(p2.C.norm() / p1.C.norm() == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(p1.B.norm() < 1e-5);
  CHECK(p1.C.norm() < 1e-11);
}

TEST_CASE("pencil assembly rejects bad cells") {
  GratingProfile low = GratingProfile::make(2.0 * kPi, 0.0, {}, {1.5});
  GratingProfile high = GratingProfile::make(2.0 * kPi, 1.0, {}, {-1.5});
  WaveguideCell crossing = WaveguideCell::make(low, high, 4, 4);
  try {
    assemble_pencil(crossing, 1.0);
    FAIL("expected CurvesIntersect");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CurvesIntersect);
  }

  try {
    assemble_pencil(strip_cell(1.0, 0, 4), 1.0);
    FAIL("expected ResolutionTooLow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ResolutionTooLow);
  }
  try {
    assemble_pencil(strip_cell(1.0, 4, 2), 1.0);
    FAIL("expected ResolutionTooLow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ResolutionTooLow);
  }
}

TEST_CASE("strip mu-eigenvalues match the dispersion enumeration") {
  double h = kPi;
  QuadraticPencil pencil = assemble_pencil(strip_cell(h, 6, 14), 2.0);
  MuSpectrum spec = mu_eigenvalues(pencil);

  std::vector<double> oracle = strip_mu_oracle(h, 2.0);
  REQUIRE(oracle.size() == 11);  // the analytic count at k = 2
  check_set_match(spec.real_mu, oracle, 1e-6);

  for (double r : spec.residuals) CHECK(r < 1e-8);
  for (int m : spec.multiplicity) CHECK(m >= 1);

  for (double mu : spec.real_mu) {
    bool found = false;
    for (double nu : spec.real_mu)
      if (std::abs(nu + mu) < 1e-8) found = true;
    CHECK(found);
  }
}

TEST_CASE("small wavenumber leaves the strip spectrum empty") {
  QuadraticPencil pencil = assemble_pencil(strip_cell(kPi, 5, 8), 0.5);
  MuSpectrum spec = mu_eigenvalues(pencil);
  CHECK(spec.real_mu.empty());
}

TEST_CASE("pencil respects the conjugation symmetry mu -> -mu") {
  QuadraticPencil pencil = assemble_pencil(curved_cell(5, 8), 2.0);
  const int P = pencil.fourier_modes, Q = pencil.transverse_modes;
  const int D = pencil.dim;

  // function conjugation: coordinates conjugate and p flips sign
  auto conj_map = [&](const Eigen::VectorXcd& v) {
    const Eigen::MatrixXcd& R = pencil.basis_transform;
    Eigen::VectorXcd w = R.triangularView<Eigen::Upper>().solve(v);
    Eigen::VectorXcd wf(D);
    for (int p = -P; p <= P; ++p)
      for (int q = 1; q <= Q; ++q)
        wf((-p + P) * Q + (q - 1)) = std::conj(w((p + P) * Q + (q - 1)));
    return (R.triangularView<Eigen::Upper>() * wf).eval();
  };

  std::mt19937 rng(23);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto residual = [&](double mu, const Eigen::VectorXcd& v) {
    return (v + mu * (pencil.B * v) + (mu * mu - 1.0) * (pencil.C * v)).norm();
  };
  for (int trial = 0; trial < 8; ++trial) {
    Eigen::VectorXcd v(D);
    for (int i = 0; i < D; ++i) v(i) = cplx(U(rng), U(rng));
    double mu = U(rng);
    double r1 = residual(mu, v);
    double r2 = residual(-mu, conj_map(v));
    CHECK(r2 == doctest::Approx(r1).epsilon(1e-9));
  }
}

TEST_CASE("strip dispersion sweep matches the formula") {
  double h = kPi;
  WaveguideCell cell = strip_cell(h, 5, 14);
  std::vector<double> grid = uniform_zone_grid(21);
  const int J = 6;
  DispersionCurve curve = dispersion_sweep(cell, grid, J);

  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> expect;
    for (int n = -6; n <= 6; ++n)
      for (int m = 1; m <= 6; ++m)
        expect.push_back(strip_dispersion(h, grid[i], n, m));
    std::sort(expect.begin(), expect.end());
    for (int j = 0; j < J; ++j)
      CHECK(curve.bands(static_cast<Eigen::Index>(i), j) ==
            doctest::Approx(expect[j]).epsilon(1e-6));
  }
}

TEST_CASE("strip_dispersion oracle arithmetic") {
  CHECK(strip_dispersion(kPi, 0.0, 0, 1) == doctest::Approx(1.0));
  CHECK(strip_dispersion(kPi, 0.5, -1, 1) == doctest::Approx(1.25));
  double at0 = strip_dispersion(kPi, 0.0, 0, 1);
  for (double a : {-0.5, -0.2, 0.1, 0.3, 0.5})
    CHECK(strip_dispersion(kPi, a, 0, 1) >= at0);
  CHECK_THROWS_AS(strip_dispersion(kPi, 0.0, 0, 0), Error);
  CHECK_THROWS_AS(strip_dispersion(-1.0, 0.0, 0, 1), Error);
}

TEST_CASE("band sets repeat with period one and are even in alpha") {
  // periodicity compared on the strip, where the truncated window is exact
  // for the low bands; evenness is window-symmetric and holds on any cell
  WaveguideCell strip = strip_cell(kPi, 6, 10);
  WaveguideCell curved = curved_cell(5, 8);
  const int J = 4;
  std::vector<double> base = uniform_zone_grid(12);
  std::vector<double> shifted = base;
  for (double& a : shifted) a += 1.0;
  std::vector<double> negated = base;
  for (double& a : negated) a = -a;
  std::sort(negated.begin(), negated.end());

  DispersionCurve s0 = dispersion_sweep(strip, base, J);
  DispersionCurve s1 = dispersion_sweep(strip, shifted, J);
  for (std::size_t i = 0; i < base.size(); ++i)
    for (int j = 0; j < J; ++j)
      CHECK(s1.bands(static_cast<Eigen::Index>(i), j) ==
            doctest::Approx(s0.bands(static_cast<Eigen::Index>(i), j))
                .epsilon(1e-8));

  DispersionCurve c0 = dispersion_sweep(curved, base, J);
  DispersionCurve cn = dispersion_sweep(curved, negated, J);
  for (std::size_t i = 0; i < base.size(); ++i) {
    double alpha = base[i];
    for (std::size_t i2 = 0; i2 < negated.size(); ++i2) {
      if (std::abs(negated[i2] + alpha) > 1e-14) continue;
      for (int j = 0; j < J; ++j)
        CHECK(cn.bands(static_cast<Eigen::Index>(i2), j) ==
              doctest::Approx(c0.bands(static_cast<Eigen::Index>(i), j))
                  .epsilon(1e-8));
    }
  }
}

TEST_CASE("flat band scan") {
  SUBCASE("strip first band varies by exactly 1/4") {
    WaveguideCell cell = strip_cell(kPi, 4, 10);
    DispersionCurve curve = dispersion_sweep(cell, uniform_zone_grid(24), 3);
    FlatBandReport report = flat_band_scan(curve, 1e-4);
    CHECK(report.flat_bands.empty());
    CHECK(report.variations[0] == doctest::Approx(0.25).epsilon(1e-8));
  }

  SUBCASE("synthetic constant band is flagged") {
    DispersionCurve fake;
    fake.alpha_grid = uniform_zone_grid(15);
    fake.bands.resize(15, 2);
    for (int i = 0; i < 15; ++i) {
      fake.bands(i, 0) = 3.0;  // flat
      fake.bands(i, 1) = 3.0 + 0.01 * i;
    }
    FlatBandReport report = flat_band_scan(fake, 1e-4);
    CHECK(report.flat_bands == std::vector<int>{1});
  }

  SUBCASE("curved cell shows no flat band") {
    WaveguideCell cell = curved_cell(5, 8);
    DispersionCurve curve = dispersion_sweep(cell, uniform_zone_grid(24), 6);
    FlatBandReport report = flat_band_scan(curve, 1e-4);
    CHECK(report.flat_bands.empty());
    for (double v : report.variations) CHECK(v > 1e-4);
  }

  SUBCASE("too few samples are rejected") {
    DispersionCurve tiny;
    tiny.alpha_grid = {0.0, 0.1};
    tiny.bands.resize(2, 1);
    tiny.bands.setZero();
    CHECK_THROWS_AS(flat_band_scan(tiny, 1e-4), Error);
  }
}

TEST_CASE("mu_from_dispersion agrees with the pencil route on the strip") {
  double h = kPi;
  WaveguideCell cell = strip_cell(h, 6, 14);
  DispersionCurve curve = dispersion_sweep(cell, uniform_zone_grid(320), 8);
  std::vector<double> mus = mu_from_dispersion(curve, 2.0);
  std::vector<double> oracle = strip_mu_oracle(h, 2.0);
  check_set_match(mus, oracle, 1e-6);

  MuSpectrum spec = mu_eigenvalues(assemble_pencil(cell, 2.0));
  REQUIRE(spec.real_mu.size() == mus.size());
  for (std::size_t i = 0; i < mus.size(); ++i)
    CHECK(std::abs(mus[i] - spec.real_mu[i]) < 1e-5);
}

TEST_CASE("mu_from_dispersion is empty below the first band") {
  WaveguideCell cell = strip_cell(kPi, 5, 8);
  DispersionCurve curve = dispersion_sweep(cell, uniform_zone_grid(64), 6);
  CHECK(mu_from_dispersion(curve, 0.5).empty());
}

TEST_CASE("mu_from_dispersion flags an out-of-range wavenumber") {
  WaveguideCell cell = strip_cell(kPi, 5, 8);
  DispersionCurve curve = dispersion_sweep(cell, uniform_zone_grid(64), 2);
  try {
    mu_from_dispersion(curve, 2.0);
    FAIL("expected BandRangeExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BandRangeExceeded);
  }
}

TEST_CASE("curved cell: two routes to one mu set") {
  WaveguideCell cell = curved_cell();
  const double k = 2.0;
  MuSpectrum spec = mu_eigenvalues(assemble_pencil(cell, k));
  DispersionCurve curve = dispersion_sweep(cell, uniform_zone_grid(320), 8);
  std::vector<double> from_bands = mu_from_dispersion(curve, k);

  REQUIRE(!spec.real_mu.empty());
  REQUIRE(spec.real_mu.size() == from_bands.size());
  for (std::size_t i = 0; i < from_bands.size(); ++i)
    CHECK(std::abs(from_bands[i] - spec.real_mu[i]) < 1e-5);

  for (double mu : from_bands) {
    bool found = false;
    for (double nu : from_bands)
      if (std::abs(nu + mu) < 1e-5) found = true;
    CHECK(found);
  }
}

TEST_CASE("bands are continuous along alpha") {
  WaveguideCell cell = curved_cell(5, 8);
  std::vector<double> grid = uniform_zone_grid(100);
  DispersionCurve curve = dispersion_sweep(cell, grid, 4);
  double dalpha = grid[1] - grid[0];
  // empirical Lipschitz scale: strip slope 2 (|alpha| + n) with n <= P + 1
  double C = 2.0 * (0.5 + cell.fourier_modes + 1.0);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(std::abs(curve.bands(static_cast<Eigen::Index>(i + 1), j) -
                     curve.bands(static_cast<Eigen::Index>(i), j)) <=
            C * dalpha);
}

TEST_CASE("2x refinement leaves the low bands unchanged to 1e-6") {
  WaveguideCell coarse = curved_cell(6, 8);
  WaveguideCell fine = curved_cell(12, 16);
  std::vector<double> probes = {-0.35, 0.0, 0.2, 0.5};
  DispersionCurve a = dispersion_sweep(coarse, probes, 4);
  DispersionCurve b = dispersion_sweep(fine, probes, 4);
  for (std::size_t i = 0; i < probes.size(); ++i)
    for (int j = 0; j < 4; ++j) {
      double va = a.bands(static_cast<Eigen::Index>(i), j);
      double vb = b.bands(static_cast<Eigen::Index>(i), j);
      CHECK(std::abs(va - vb) / std::abs(vb) < 1e-6);
    }
}

TEST_CASE("cells with other periods are normalized to 2 pi") {
  // strip of height 2 with period 4 pi: normalization halves lengths
  WaveguideCell cell =
      WaveguideCell::make(GratingProfile::flat(4.0 * kPi, 0.0),
                          GratingProfile::flat(4.0 * kPi, 2.0), 6, 8);
  CHECK(cell.length_scale == doctest::Approx(0.5));
  CHECK(cell.upper.offset == doctest::Approx(1.0));
  QuadraticPencil pencil = assemble_pencil(cell, 2.0);
  MuSpectrum spec = mu_eigenvalues(pencil);
  // on the normalized strip the wavenumber is k / scale = 4, height 1
  std::vector<double> oracle = strip_mu_oracle(1.0, 4.0);
  check_set_match(spec.real_mu, oracle, 1e-6);
}
