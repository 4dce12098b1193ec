#pragma once

// Recovery of phased Rayleigh coefficients from intensity-only data.  Above
// the grating the intensity of the total field expands as
//
//   |u(x)|^2 = sum_{m,n} A_m conj(A_n)
//              exp(i (alpha_m - alpha_n) x1 + i (beta_m - conj(beta_n)) x2)
//
// over mode indices in the window plus the incident index.  The known
// incident wave (A_inc = 1) is a holographic reference: whenever
// k sin(theta) L / pi is not an integer, each cross frequency (n, inc) is
// owned by a single pair, so a linear fit of the intensity against the
// frequency dictionary returns the phased A_n directly.  At the excluded
// angles some reference frequencies merge with other pairs and the
// coefficients are only determined as a family.

#include <Eigen/Dense>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "grating/forward.hpp"
#include "grating/profile.hpp"
#include "grating/rayleigh.hpp"

namespace grating {

// sentinel index for the incident wave in catalog pairs
inline constexpr int kIncident = std::numeric_limits<int>::min();

struct CatalogEntry {
  int m = 0;
  int n = 0;
  double freq_alpha = 0.0;  // alpha_m - alpha_n
  cplx freq_beta;           // beta_m - conj(beta_n)
  int cls = -1;             // collision class id
};

struct FrequencyCatalog {
  double k = 0.0;
  double theta = 0.0;
  double period = 0.0;
  int window = 0;
  bool excluded_angle = false;  // k sin(theta) L / pi integer
  bool near_collision = false;  // distinct classes closer than 1e-4 k
  std::vector<CatalogEntry> entries;
  std::vector<std::vector<int>> classes;  // entry indices per class

  int entry_index(int m, int n) const;  // -1 when absent
  const CatalogEntry& entry(int m, int n) const;
  int reference_class(int n) const;  // class of (n, inc)
  bool reference_singleton(int n) const;
};

// All pairwise intensity frequencies over the window plus the incident
// index; exact collisions grouped with tolerance 1e-10 k.
FrequencyCatalog catalog_frequencies(double k, double theta, double L,
                                     int window);

// true iff alpha_n = -alpha_inc for some n in the window or n = inc; always
// false when alpha L / pi is not an integer.
bool check_alpha_collision(double k, double theta, double L, int window);

// Smallest window holding every propagating mode plus the evanescent margin
// |beta_n| * gap < cut (gap = measurement height minus profile maximum).
int recommended_window(double k, double theta, double L, double gap,
                       double evanescent_cut = 23.0);

struct PhaselessSamples {
  std::vector<double> x1;    // strictly increasing, spans >= one period
  std::vector<double> x2;    // strictly increasing, above the profile
  Eigen::MatrixXd intensity; // intensity(i, j) = |u|^2 at (x1[i], x2[j])
  PlaneWave wave;
  std::optional<double> period;  // empty when unknown
  double profile_max = 0.0;

  static PhaselessSamples make(std::vector<double> x1, std::vector<double> x2,
                               Eigen::MatrixXd intensity, PlaneWave wave,
                               std::optional<double> period,
                               double profile_max);
};

// |u_i + u_s|^2 on a rectangular grid (the measurement synthesizer used by
// roundtrip, tests and the CLI).
PhaselessSamples synthesize_intensity(const RayleighExpansion& scattered,
                                      const PlaneWave& wave,
                                      std::vector<double> x1_grid,
                                      std::vector<double> x2_grid,
                                      double profile_max);

struct RetrievalResult {
  std::map<int, cplx> coefficients;  // recovered A_n over the window
  double rank_one_defect = 0.0;      // rank-one model misfit in the data norm
  double fit_residual = 0.0;
  bool excluded_angle = false;
  std::vector<int> collided_reference;  // n whose (n, inc) class merged
  bool unique = true;                   // false marks a non-unique family
  int dictionary_classes = 0;
  int unresolved_classes = 0;  // coefficients zeroed as noise-dominated
};

// Linear least-squares fit of the intensity against one representative
// frequency per collision class, then A_n = c_{(n, inc)} (A_inc = 1).
// Errors: NyquistViolated when the grid cannot resolve the dictionary;
// RankOneDefectHigh when unique data is inconsistent with a single
// quasi-periodic field (defect > 1e-3).
RetrievalResult retrieve_coefficients(const PhaselessSamples& samples,
                                      const FrequencyCatalog& catalog);

struct RoundtripConfig {
  CollocationConfig forward;
  double height = 0.0;         // 0 selects profile max + 1
  double height_extent = 1.0;  // x2 spans [height, height + extent]
  int nx1 = 64;
  int nx2 = 33;
  double evanescent_cut = 23.0;
};

struct RoundtripReport {
  ForwardSolution solution;
  RetrievalResult retrieval;
  // absent when the retrieval is flagged non-unique (no discrepancy claimed)
  std::optional<double> max_coeff_error;
  std::optional<double> max_phase_error;
};

// forward solve -> synthesize |u|^2 -> retrieve -> compare against the
// phased coefficients.
RoundtripReport roundtrip(const GratingProfile& profile, const PlaneWave& wave,
                          const RoundtripConfig& config);

struct PeriodEstimate {
  std::vector<double> candidates;   // compatible periods, smallest first
  bool degenerate = false;          // no nonzero frequency: any period fits
  std::vector<double> frequencies;  // detected spatial frequencies of
                                    // exp(-i alpha x1) u_s, DC excluded
};

// Dominant spatial frequencies of the demodulated line trace by matching
// pursuit over complex exponentials; periods L <= candidate_max whose lattice
// (2 pi / L) Z contains every detected frequency are returned ascending.
// FrequenciesIncommensurate when no such period exists.
PeriodEstimate estimate_period(const std::vector<double>& x1,
                               const std::vector<cplx>& scattered_on_line,
                               double k, double theta, double candidate_max);

}  // namespace grating
