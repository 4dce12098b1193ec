#pragma once

// Dirichlet diffraction solve by Rayleigh-mode collocation: the scattered
// field is expanded in modes of the grating period and the coefficients are
// fit by least squares so that u_i + u_s vanishes at equispaced points on the
// curve.  Valid for shallow smooth graphs; the residual and conditioning
// diagnostics police the Rayleigh hypothesis, they are recorded for every
// solve and a solve is only accepted below the residual tolerance.

#include <optional>
#include <string>
#include <vector>

#include "grating/profile.hpp"
#include "grating/rayleigh.hpp"

namespace grating {

struct CollocationConfig {
  int mode_count = 16;          // N; scattered modes n in [-N, N]
  int collocation_count = 0;    // M; 0 selects 2 (2N + 1)
  double residual_tolerance = 1e-6;
  double condition_cap = 1e12;
  double incident_scale = 1.0;  // scales the incident trace (linearity knob)
  int residual_factor = 4;      // dense residual points = factor * M

  int resolved_collocation_count() const;
  void validate() const;  // enforces M >= 2N + 1
};

struct ForwardSolution {
  RayleighExpansion expansion;   // scattered part, coefficients A_n
  double boundary_residual = 0;  // sup |u_i + u_s| over dense curve samples
  double energy_defect = 0;
  double condition = 0;          // sigma_max / sigma_min of the collocation matrix
};

ForwardSolution solve_dirichlet(const GratingProfile& profile,
                                const PlaneWave& wave,
                                const CollocationConfig& config);

double boundary_residual(const RayleighExpansion& scattered,
                         const GratingProfile& profile, const PlaneWave& wave,
                         int dense_count, double incident_scale = 1.0);

struct AngleOutcome {
  double theta = 0.0;
  std::optional<ForwardSolution> solution;
  std::string error;
  std::optional<ErrorCode> code;
};

// One independently diagnosed solve per angle, order preserved; per-angle
// failures are collected rather than short-circuited.  Angles must be
// pairwise distinct.
std::vector<AngleOutcome> solve_multi_angle(const GratingProfile& profile,
                                            double k,
                                            const std::vector<double>& angles,
                                            const CollocationConfig& config,
                                            int workers = 0);

// Periodic piecewise-linear curve through the given vertices; first vertex at
// x1 = 0, last at x1 = period with equal heights.
struct PiecewiseLinearCurve {
  double period = 0.0;
  std::vector<Point> vertices;

  static PiecewiseLinearCurve make(double period, std::vector<Point> vertices);
  double operator()(double x1) const;
  double max_height() const;
};

double boundary_residual(const RayleighExpansion& scattered,
                         const PiecewiseLinearCurve& curve,
                         const PlaneWave& wave, int dense_count);

// The closed-form two-period example: one incident wave (k = 2,
// theta = -pi/6) whose total field 2 cos(x1 + sqrt(3) x2) - 2 cos(2 x1)
// vanishes on two zigzag curves of minimum periods 2 pi and 4 pi.  Both
// expansions represent the identical scattered field, reindexed.
struct CounterexampleFixture {
  PlaneWave wave;
  PiecewiseLinearCurve profile1;  // minimum period 2 pi
  PiecewiseLinearCurve profile2;  // minimum period 4 pi
  RayleighExpansion expansion1;   // L = 2 pi: A_2 = 1, A_-1 = A_3 = -1
  RayleighExpansion expansion2;   // L = 4 pi: A_4 = 1, A_-2 = A_6 = -1

  // closed-form total field of the fixture
  cplx total_field(double x1, double x2) const;
};

CounterexampleFixture counterexample_fixture();

}  // namespace grating
