#pragma once

// Quasi-periodic plane-wave modes and Rayleigh series for 2D Dirichlet
// gratings.  A time-harmonic field above a curve of period L illuminated at
// angle theta decomposes into modes exp(i alpha_n x1 + i beta_n x2) with
//
//   alpha_n = k sin(theta) + 2 pi n / L,
//   beta_n  = sqrt(k^2 - alpha_n^2)    for |alpha_n| <= k  (propagating),
//   beta_n  = i sqrt(alpha_n^2 - k^2)  for |alpha_n| >  k  (evanescent).
//
// The square-root branch is pinned by the two-case formula above; a generic
// complex sqrt is never used.  Indices with beta_n = 0 are Rayleigh
// frequencies (Wood anomalies): grazing modes that carry no vertical flux.

#include <complex>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "grating/errors.hpp"

namespace grating {

using cplx = std::complex<double>;

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

// |beta_n| < kAnomalyRelTol * k counts as "beta_n = 0".
inline constexpr double kAnomalyRelTol = 1e-12;

struct PlaneWave {
  double k = 0.0;         // wavenumber, > 0
  double theta = 0.0;     // incident angle in (-pi/2, pi/2)
  double alpha = 0.0;     // k sin(theta), phase shift of the field
  double beta_inc = 0.0;  // -k cos(theta), always < 0

  static PlaneWave make(double k, double theta);

  // exp(i alpha x1 + i beta_inc x2); unit amplitude by convention.
  cplx field(double x1, double x2) const;
  cplx field(Point p) const { return field(p.x1, p.x2); }
};

// (alpha_n, beta_n) for one index.  Rejects k <= 0, L <= 0 and theta outside
// the open interval (-pi/2, pi/2).
std::pair<double, cplx> mode_params(double k, double theta, double L, int n);

struct ModeGrid {
  double period = 0.0;
  double alpha0 = 0.0;  // phase shift k sin(theta)
  double k = 0.0;
  int window = 0;       // indices n in [-window, window]

  static ModeGrid make(double k, double theta, double L, int window);
  static ModeGrid make(const PlaneWave& wave, double L, int window);

  double alpha_n(int n) const { return alpha0 + 2.0 * pi() * n / period; }
  cplx beta_n(int n) const;
  bool propagating(int n) const;
  bool anomalous(int n) const;  // |beta_n| < kAnomalyRelTol * k

  static double pi();
};

struct ModeSets {
  std::vector<int> propagating;    // {n in window : |alpha_n| <= k}
  std::vector<int> rayleigh_freq;  // {n in window : beta_n = 0}
};

ModeSets propagating_set(double k, double theta, double L, int window);

// Truncated Rayleigh series.  The coefficient map may carry indices outside
// the grid window; those are the "tail" modes bounded by tail_bound below.
// When includes_incident is set the series also carries the incident term
// exp(i alpha0 x1 - i beta_0 x2) with unit amplitude, which requires a
// propagating zeroth mode.
struct RayleighExpansion {
  ModeGrid grid;
  std::map<int, cplx> coeffs;
  bool includes_incident = false;
  double reference_height = 0.0;

  static RayleighExpansion make(ModeGrid grid, std::map<int, cplx> coeffs,
                                bool includes_incident, double reference_height);

  RayleighExpansion with_incident() const;
  RayleighExpansion scattered_only() const;

  cplx coeff(int n) const;
  cplx value(double x1, double x2) const;
  cplx value(Point p) const { return value(p.x1, p.x2); }
};

struct FieldSamples {
  std::vector<Point> points;
  std::vector<cplx> values;
  std::string metadata;
  int below_reference = 0;  // samples taken under the expansion's height
};

// Sums the truncated series at the given points.  Evaluation below the
// reference height is allowed but counted (and noted on stderr unless the
// caller passes allow_below_reference), because the expansion is only
// guaranteed above the producing profile.
FieldSamples evaluate_field(const RayleighExpansion& expansion,
                            const std::vector<Point>& points,
                            bool allow_below_reference = false,
                            std::string metadata = {});

// Upper bound on sum_{|n| > window} |A_n exp(i beta_n x2)| for x2 >= h.
// Supplied out-of-window modes are summed from their decay at the reference
// height h0: |A_n exp(i beta_n h)| = |A_n exp(i beta_n h0)| exp(-Im beta_n (h-h0)).
// Indices beyond the supplied range are majorized by a geometric series with
// ratio exp(-2 pi (h-h0) / L), using that Im beta grows by at least 2 pi / L
// per step in the evanescent range.  Rejects h <= reference height.
double tail_bound(const RayleighExpansion& expansion, double h);

struct EnergyBalance {
  std::map<int, double> efficiencies;  // e_n = (beta_n / beta_0) |A_n|^2
  double defect = 0.0;                 // |sum e_n - 1|
};

// Efficiencies of the propagating scattered orders; anomalous orders carry no
// flux and contribute zero.  Fails with SpecularAnomaly when beta_0 = 0.
EnergyBalance energy_balance(const RayleighExpansion& expansion);

using FieldSampler = std::function<cplx(double, double)>;

// max over probes of |u(x1 + L, x2) - exp(i alpha L) u(x1, x2)|.
double quasiperiodicity_defect(const FieldSampler& sampler, double L,
                               double alpha, const std::vector<Point>& probes);

}  // namespace grating
