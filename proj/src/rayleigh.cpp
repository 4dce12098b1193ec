#include "grating/rayleigh.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>

namespace grating {

namespace {

constexpr double kPi = std::numbers::pi;

void check_wave_params(double k, double theta, double L) {
  require(k > 0.0, ErrorCode::InvalidArgument, "wavenumber must be positive");
  require(L > 0.0, ErrorCode::InvalidArgument, "period must be positive");
  require(theta > -kPi / 2.0 && theta < kPi / 2.0, ErrorCode::InvalidArgument,
          "incident angle must lie in (-pi/2, pi/2)");
}

cplx beta_from_alpha(double k, double alpha_n) {
  // Two-case branch of the vertical wavenumber; never a generic complex sqrt.
  double gap = (k - alpha_n) * (k + alpha_n);  // k^2 - alpha_n^2
  if (std::abs(alpha_n) <= k) return cplx(std::sqrt(gap), 0.0);
  return cplx(0.0, std::sqrt(-gap));
}

}  // namespace

PlaneWave PlaneWave::make(double k, double theta) {
  check_wave_params(k, theta, 1.0);
  PlaneWave w;
  w.k = k;
  w.theta = theta;
  w.alpha = k * std::sin(theta);
  w.beta_inc = -k * std::cos(theta);
  return w;
}

cplx PlaneWave::field(double x1, double x2) const {
  return std::exp(cplx(0.0, alpha * x1 + beta_inc * x2));
}

std::pair<double, cplx> mode_params(double k, double theta, double L, int n) {
  check_wave_params(k, theta, L);
  double alpha_n = k * std::sin(theta) + 2.0 * kPi * n / L;
  return {alpha_n, beta_from_alpha(k, alpha_n)};
}

double ModeGrid::pi() { return kPi; }

ModeGrid ModeGrid::make(double k, double theta, double L, int window) {
  check_wave_params(k, theta, L);
  require(window >= 0, ErrorCode::InvalidArgument, "window must be >= 0");
  ModeGrid g;
  g.period = L;
  g.alpha0 = k * std::sin(theta);
  g.k = k;
  g.window = window;
  return g;
}

ModeGrid ModeGrid::make(const PlaneWave& wave, double L, int window) {
  require(L > 0.0, ErrorCode::InvalidArgument, "period must be positive");
  require(window >= 0, ErrorCode::InvalidArgument, "window must be >= 0");
  ModeGrid g;
  g.period = L;
  g.alpha0 = wave.alpha;
  g.k = wave.k;
  g.window = window;
  return g;
}

cplx ModeGrid::beta_n(int n) const { return beta_from_alpha(k, alpha_n(n)); }

bool ModeGrid::propagating(int n) const { return std::abs(alpha_n(n)) <= k; }

bool ModeGrid::anomalous(int n) const {
  return std::abs(beta_n(n)) < kAnomalyRelTol * k;
}

ModeSets propagating_set(double k, double theta, double L, int window) {
  check_wave_params(k, theta, L);
  ModeGrid grid = ModeGrid::make(k, theta, L, window);
  ModeSets sets;
  for (int n = -window; n <= window; ++n) {
    if (grid.propagating(n)) sets.propagating.push_back(n);
    if (grid.anomalous(n)) sets.rayleigh_freq.push_back(n);
  }
  return sets;
}

RayleighExpansion RayleighExpansion::make(ModeGrid grid,
                                          std::map<int, cplx> coeffs,
                                          bool includes_incident,
                                          double reference_height) {
  RayleighExpansion e;
  e.grid = grid;
  e.coeffs = std::move(coeffs);
  e.includes_incident = includes_incident;
  e.reference_height = reference_height;
  if (includes_incident) {
    require(std::abs(grid.alpha0) < grid.k, ErrorCode::InvalidArgument,
            "incident term requires |alpha0| < k");
  }
  return e;
}

RayleighExpansion RayleighExpansion::with_incident() const {
  return make(grid, coeffs, true, reference_height);
}

RayleighExpansion RayleighExpansion::scattered_only() const {
  return make(grid, coeffs, false, reference_height);
}

cplx RayleighExpansion::coeff(int n) const {
  auto it = coeffs.find(n);
  return it == coeffs.end() ? cplx(0.0, 0.0) : it->second;
}

cplx RayleighExpansion::value(double x1, double x2) const {
  cplx sum(0.0, 0.0);
  for (const auto& [n, a] : coeffs) {
    if (a == cplx(0.0, 0.0)) continue;
    cplx phase = cplx(0.0, 1.0) *
                 (grid.alpha_n(n) * x1 + grid.beta_n(n) * x2);
    sum += a * std::exp(phase);
  }
  if (includes_incident) {
    double beta0 = grid.beta_n(0).real();
    sum += std::exp(cplx(0.0, grid.alpha0 * x1 - beta0 * x2));
  }
  return sum;
}

FieldSamples evaluate_field(const RayleighExpansion& expansion,
                            const std::vector<Point>& points,
                            bool allow_below_reference, std::string metadata) {
  FieldSamples out;
  out.points = points;
  out.metadata = std::move(metadata);
  out.values.reserve(points.size());
  for (const Point& p : points) {
    if (p.x2 < expansion.reference_height) ++out.below_reference;
    out.values.push_back(expansion.value(p));
  }
  if (out.below_reference > 0 && !allow_below_reference) {
    std::cerr << "grating: evaluate_field: " << out.below_reference
              << " sample(s) below the reference height "
              << expansion.reference_height << "\n";
  }
  return out;
}

double tail_bound(const RayleighExpansion& expansion, double h) {
  const double h0 = expansion.reference_height;
  require(h > h0, ErrorCode::InvalidArgument,
          "tail_bound requires a height above the reference height");
  const ModeGrid& grid = expansion.grid;
  const int N = grid.window;
  const double dh = h - h0;

  double direct = 0.0;
  double peak_pos = 0.0, peak_neg = 0.0;  // amplitudes at h0, per side
  int max_pos = N, min_neg = -N;
  for (const auto& [n, a] : expansion.coeffs) {
    if (std::abs(n) <= N) continue;
    double im_beta = grid.beta_n(n).imag();
    double at_h0 = std::abs(a) * std::exp(-im_beta * h0);
    direct += at_h0 * std::exp(-im_beta * dh);
    if (n > 0) {
      peak_pos = std::max(peak_pos, at_h0);
      max_pos = std::max(max_pos, n);
    } else {
      peak_neg = std::max(peak_neg, at_h0);
      min_neg = std::min(min_neg, n);
    }
  }

  // Geometric majorant for indices beyond the supplied range, one side at a
  // time.  Modes not yet evanescent are bounded by the side's peak amplitude.
  auto side = [&](int start, int step, double peak) {
    if (peak == 0.0) return 0.0;
    double bound = 0.0;
    int n = start;
    while (!(std::abs(grid.alpha_n(n)) > grid.k &&
             std::abs(grid.alpha_n(n + step)) > std::abs(grid.alpha_n(n)))) {
      bound += peak * std::exp(-grid.beta_n(n).imag() * dh);
      n += step;
    }
    double q = std::exp(-2.0 * kPi * dh / grid.period);
    bound += peak * std::exp(-grid.beta_n(n).imag() * dh) / (1.0 - q);
    return bound;
  };

  return direct + side(max_pos + 1, +1, peak_pos) + side(min_neg - 1, -1, peak_neg);
}

EnergyBalance energy_balance(const RayleighExpansion& expansion) {
  const ModeGrid& grid = expansion.grid;
  double beta0 = grid.beta_n(0).real();
  require(std::abs(grid.beta_n(0)) >= kAnomalyRelTol * grid.k,
          ErrorCode::SpecularAnomaly,
          "energy balance undefined at a specular-order anomaly (beta_0 = 0)");
  require(beta0 > 0.0, ErrorCode::InvalidArgument,
          "energy balance requires a propagating zeroth mode");

  EnergyBalance result;
  double total = 0.0;
  for (const auto& [n, a] : expansion.coeffs) {
    if (!grid.propagating(n)) continue;
    double e = grid.anomalous(n)
                   ? 0.0
                   : grid.beta_n(n).real() / beta0 * std::norm(a);
    result.efficiencies[n] = e;
    total += e;
  }
  result.defect = std::abs(total - 1.0);
  return result;
}

double quasiperiodicity_defect(const FieldSampler& sampler, double L,
                               double alpha, const std::vector<Point>& probes) {
  cplx factor = std::exp(cplx(0.0, alpha * L));
  double worst = 0.0;
  for (const Point& p : probes) {
    cplx shifted = sampler(p.x1 + L, p.x2);
    cplx base = sampler(p.x1, p.x2);
    worst = std::max(worst, std::abs(shifted - factor * base));
  }
  return worst;
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::CurvesIntersect: return "CurvesIntersect";
    case ErrorCode::ResolutionTooLow: return "ResolutionTooLow";
    case ErrorCode::NyquistViolated: return "NyquistViolated";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::ResidualExceeded: return "ResidualExceeded";
    case ErrorCode::SpecularAnomaly: return "SpecularAnomaly";
    case ErrorCode::LinearizationSingular: return "LinearizationSingular";
    case ErrorCode::BandRangeExceeded: return "BandRangeExceeded";
    case ErrorCode::RankOneDefectHigh: return "RankOneDefectHigh";
    case ErrorCode::FrequenciesIncommensurate: return "FrequenciesIncommensurate";
    case ErrorCode::Diverged: return "Diverged";
  }
  return "Unknown";
}

}  // namespace grating
