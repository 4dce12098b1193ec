#include "grating/forward.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "grating/parallel.hpp"

namespace grating {

namespace {
constexpr double kPi = std::numbers::pi;
}

int CollocationConfig::resolved_collocation_count() const {
  return collocation_count > 0 ? collocation_count
                               : 2 * (2 * mode_count + 1);
}

void CollocationConfig::validate() const {
  require(mode_count >= 0, ErrorCode::InvalidArgument,
          "mode count must be >= 0");
  require(resolved_collocation_count() >= 2 * mode_count + 1,
          ErrorCode::InvalidArgument,
          "collocation count must be at least 2N + 1");
  require(residual_tolerance > 0.0, ErrorCode::InvalidArgument,
          "residual tolerance must be positive");
  require(residual_factor >= 4, ErrorCode::InvalidArgument,
          "residual check needs at least 4x the collocation count");
}

ForwardSolution solve_dirichlet(const GratingProfile& profile,
                                const PlaneWave& wave,
                                const CollocationConfig& config) {
  config.validate();
  const int N = config.mode_count;
  const int M = config.resolved_collocation_count();
  const int cols = 2 * N + 1;
  const double L = profile.period;
  ModeGrid grid = ModeGrid::make(wave, L, N);

  Eigen::MatrixXcd A(M, cols);
  Eigen::VectorXcd rhs(M);
  for (int j = 0; j < M; ++j) {
    double x1 = L * j / M;
    double x2 = profile(x1);
    for (int n = -N; n <= N; ++n) {
      cplx phase = cplx(0.0, 1.0) * (grid.alpha_n(n) * x1 + grid.beta_n(n) * x2);
      A(j, n + N) = std::exp(phase);
    }
    rhs(j) = -config.incident_scale * wave.field(x1, x2);
  }

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU |
                                                Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  double condition = sigma(0) / sigma(sigma.size() - 1);
  if (!(condition < config.condition_cap)) {
    std::ostringstream msg;
    msg << "collocation system condition " << condition
        << " exceeds cap " << config.condition_cap
        << " (deep profile or Rayleigh-hypothesis failure)";
    fail(ErrorCode::IllConditioned, msg.str());
  }
  Eigen::VectorXcd x = svd.solve(rhs);

  std::map<int, cplx> coeffs;
  for (int n = -N; n <= N; ++n) coeffs[n] = x(n + N);
  double h = profile.max_height;
  RayleighExpansion expansion =
      RayleighExpansion::make(grid, std::move(coeffs), false, h);

  ForwardSolution sol;
  sol.expansion = std::move(expansion);
  sol.condition = condition;
  sol.boundary_residual = boundary_residual(
      sol.expansion, profile, wave, config.residual_factor * M,
      config.incident_scale);
  sol.energy_defect =
      std::abs(config.incident_scale) > 0.0
          ? [&] {
              // Efficiencies are quadratic in the amplitude; normalize so the
              // defect stays comparable across incident scales.
              RayleighExpansion unit = sol.expansion;
              for (auto& [n, a] : unit.coeffs) a /= config.incident_scale;
              return energy_balance(unit).defect;
            }()
          : 0.0;

  if (!(sol.boundary_residual < config.residual_tolerance)) {
    std::ostringstream msg;
    msg << "boundary residual " << sol.boundary_residual
        << " exceeds tolerance " << config.residual_tolerance;
    fail(ErrorCode::ResidualExceeded, msg.str());
  }
  return sol;
}

double boundary_residual(const RayleighExpansion& scattered,
                         const GratingProfile& profile, const PlaneWave& wave,
                         int dense_count, double incident_scale) {
  require(dense_count > 0, ErrorCode::InvalidArgument,
          "dense_count must be positive");
  double worst = 0.0;
  for (int j = 0; j < dense_count; ++j) {
    double x1 = profile.period * j / dense_count;
    double x2 = profile(x1);
    cplx total = incident_scale * wave.field(x1, x2) + scattered.value(x1, x2);
    worst = std::max(worst, std::abs(total));
  }
  return worst;
}

double boundary_residual(const RayleighExpansion& scattered,
                         const PiecewiseLinearCurve& curve,
                         const PlaneWave& wave, int dense_count) {
  require(dense_count > 0, ErrorCode::InvalidArgument,
          "dense_count must be positive");
  double worst = 0.0;
  for (int j = 0; j < dense_count; ++j) {
    double x1 = curve.period * j / dense_count;
    double x2 = curve(x1);
    cplx total = wave.field(x1, x2) + scattered.value(x1, x2);
    worst = std::max(worst, std::abs(total));
  }
  return worst;
}

std::vector<AngleOutcome> solve_multi_angle(const GratingProfile& profile,
                                            double k,
                                            const std::vector<double>& angles,
                                            const CollocationConfig& config,
                                            int workers) {
  for (std::size_t i = 0; i < angles.size(); ++i)
    for (std::size_t j = i + 1; j < angles.size(); ++j)
      require(angles[i] != angles[j], ErrorCode::InvalidArgument,
              "incident angles must be pairwise distinct");
  config.validate();

  std::vector<AngleOutcome> out(angles.size());
  parallel_for(angles.size(), workers, [&](std::size_t i) {
    out[i].theta = angles[i];
    try {
      PlaneWave wave = PlaneWave::make(k, angles[i]);
      out[i].solution = solve_dirichlet(profile, wave, config);
    } catch (const Error& e) {
      out[i].error = e.what();
      out[i].code = e.code();
    }
  });
  return out;
}

PiecewiseLinearCurve PiecewiseLinearCurve::make(double period,
                                                std::vector<Point> vertices) {
  require(period > 0.0, ErrorCode::InvalidArgument, "period must be positive");
  require(vertices.size() >= 2, ErrorCode::InvalidArgument,
          "curve needs at least two vertices");
  require(vertices.front().x1 == 0.0, ErrorCode::InvalidArgument,
          "first vertex must sit at x1 = 0");
  require(std::abs(vertices.back().x1 - period) < 1e-12 * period,
          ErrorCode::InvalidArgument, "last vertex must sit at x1 = period");
  require(std::abs(vertices.front().x2 - vertices.back().x2) < 1e-12,
          ErrorCode::InvalidArgument, "curve must close periodically");
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i)
    require(vertices[i].x1 < vertices[i + 1].x1, ErrorCode::InvalidArgument,
            "vertex abscissae must increase");
  PiecewiseLinearCurve c;
  c.period = period;
  c.vertices = std::move(vertices);
  return c;
}

double PiecewiseLinearCurve::operator()(double x1) const {
  double t = std::fmod(x1, period);
  if (t < 0.0) t += period;
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
    if (t <= vertices[i + 1].x1) {
      const Point& a = vertices[i];
      const Point& b = vertices[i + 1];
      double s = (t - a.x1) / (b.x1 - a.x1);
      return a.x2 + s * (b.x2 - a.x2);
    }
  }
  return vertices.back().x2;
}

double PiecewiseLinearCurve::max_height() const {
  double m = vertices.front().x2;
  for (const Point& v : vertices) m = std::max(m, v.x2);
  return m;
}

cplx CounterexampleFixture::total_field(double x1, double x2) const {
  double s3 = std::sqrt(3.0);
  return 2.0 * std::cos(x1 + s3 * x2) - 2.0 * std::cos(2.0 * x1);
}

CounterexampleFixture counterexample_fixture() {
  // Zeros of the total field are the lines 3 x1 + sqrt(3) x2 = 2 m pi and
  // -x1 + sqrt(3) x2 = 2 n pi; the zigzags below run along them with
  // vertices at intersections x1 = (m - n) pi / 2.
  const double s3 = std::sqrt(3.0);
  CounterexampleFixture fx;
  fx.wave = PlaneWave::make(2.0, -kPi / 6.0);

  fx.profile1 = PiecewiseLinearCurve::make(
      2.0 * kPi, {{0.0, 0.0},
                  {1.5 * kPi, s3 * kPi / 2.0},
                  {2.0 * kPi, 0.0}});
  fx.profile2 = PiecewiseLinearCurve::make(
      4.0 * kPi, {{0.0, 0.0},
                  {1.5 * kPi, s3 * kPi / 2.0},
                  {2.5 * kPi, -s3 * kPi / 2.0},
                  {4.0 * kPi, 0.0}});

  const double h = 3.0;  // above both curves (max height sqrt(3) pi / 2)
  fx.expansion1 = RayleighExpansion::make(
      ModeGrid::make(fx.wave, 2.0 * kPi, 6),
      {{2, cplx(1.0, 0.0)}, {-1, cplx(-1.0, 0.0)}, {3, cplx(-1.0, 0.0)}},
      false, h);
  fx.expansion2 = RayleighExpansion::make(
      ModeGrid::make(fx.wave, 4.0 * kPi, 8),
      {{4, cplx(1.0, 0.0)}, {-2, cplx(-1.0, 0.0)}, {6, cplx(-1.0, 0.0)}},
      false, h);
  return fx;
}

}  // namespace grating
