#pragma once

// Spectral Galerkin machinery for the closed periodic waveguide between two
// non-intersecting periodic graphs.  The cell is mapped to the rectangle
// (x1, t) in [0, 2 pi] x [0, 1] via x2 = f1(x1) + t (f2(x1) - f1(x1)) and
// discretized in the tensor basis exp(i p x1) sin(q pi t), which is periodic
// in x1 and vanishes on both boundary curves.
//
// Three Galerkin forms are assembled:
//   S  = grad w . grad conj(psi)            (the H inner product),
//   G1 = -i (d1 w conj(psi) - w d1 conj(psi))   so that  G = k G1,
//   M0 = w conj(psi)                         so that  C-form = k^2 M0.
// After the congruence with the Cholesky factor of S the mu-eigenvalue
// problem reads exactly  w + mu B w + (mu^2 - 1) C w = 0  with B, C Hermitian
// and C positive definite.  The fixed-k quasimomentum problem for the
// dispersion bands uses the same forms: S(alpha) = S + alpha G1 + alpha^2 M0.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "grating/profile.hpp"
#include "grating/rayleigh.hpp"

namespace grating {

struct WaveguideCell {
  GratingProfile lower;  // f1, period normalized to 2 pi
  GratingProfile upper;  // f2 > f1 pointwise
  int fourier_modes = 6;     // longitudinal: p in [-P, P]
  int transverse_modes = 6;  // q in [1, Q]

  // Accepts any common period; geometry is rescaled so the stored cell has
  // period 2 pi (lengths scale by 2 pi / L, wavenumbers by L / 2 pi).
  static WaveguideCell make(const GratingProfile& lower,
                            const GratingProfile& upper, int fourier_modes,
                            int transverse_modes);

  double length_scale = 1.0;  // 2 pi / original period
  bool is_straight_strip() const;
  std::string id() const;
};

struct QuadraticPencil {
  int dim = 0;
  Eigen::MatrixXcd B;  // Hermitian
  Eigen::MatrixXcd C;  // Hermitian positive definite
  double k = 0.0;
  std::string cell_id;
  int fourier_modes = 0;
  int transverse_modes = 0;
  // Upper-triangular factor R with S = R^H R; pencil coordinates are v = R w.
  Eigen::MatrixXcd basis_transform;
};

// Galerkin matrices of the three forms with the change of variables Jacobian
// included, scaled so the equation reads w + mu B w + (mu^2 - 1) C w = 0.
// Errors: CurvesIntersect when min(f2 - f1) <= 0, ResolutionTooLow when a
// direction has fewer than 3 basis functions.
QuadraticPencil assemble_pencil(const WaveguideCell& cell, double k);

struct MuSpectrum {
  double k = 0.0;
  std::vector<double> real_mu;       // sorted ascending, in (-1, 1)
  std::vector<int> multiplicity;     // merged within 1e-8 relative distance
  std::vector<double> residuals;     // ||(I + mu B + (mu^2-1) C) w|| / ||w||
  std::vector<cplx> complex_mu;      // discarded but reported
};

// Companion linearization of the quadratic pencil to a 2D-dimensional linear
// eigenproblem; eigenvalues with |Im mu| < 1e-8 and residual < 1e-8 are kept
// as real.  LinearizationSingular if the mass block C is numerically singular.
MuSpectrum mu_eigenvalues(const QuadraticPencil& pencil);

struct DispersionCurve {
  std::vector<double> alpha_grid;
  // bands(i, j) = K_{j+1}(alpha_grid[i]), ascending in j
  Eigen::MatrixXd bands;
};

// Lowest `band_count` eigenvalues K of -grad_alpha . grad_alpha w = K w with
// periodic/Dirichlet conditions, for each alpha of the grid.
DispersionCurve dispersion_sweep(const WaveguideCell& cell,
                                 const std::vector<double>& alpha_grid,
                                 int band_count, int workers = 0);

// (alpha + n)^2 + (m pi / h)^2; the analytic dispersion of the straight
// strip of height h, used as the oracle for the two operations above.
double strip_dispersion(double h, double alpha, int n, int m);

struct FlatBandReport {
  std::vector<int> flat_bands;      // 1-based indices with variation < tol
  std::vector<double> variations;   // max - min per band over the grid
};

// Flags bands whose variation over the sampled grid falls below tol; needs
// at least 11 sample points.
FlatBandReport flat_band_scan(const DispersionCurve& curve, double tol);

// Roots of K_j(mu k) = k^2 for mu in (-1, 1), computed from the sampled
// curve by bracketing plus local quadratic refinement (the band set is
// 1-periodic in alpha, so zone roots are shifted by integers).  Detects
// tangential touches at band minima.  BandRangeExceeded when k^2 is not
// dominated by the top sampled band.
std::vector<double> mu_from_dispersion(const DispersionCurve& curve, double k);

}  // namespace grating
