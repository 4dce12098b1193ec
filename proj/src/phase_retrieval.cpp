#include "grating/phase_retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace grating {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kExcludedAngleTol = 1e-9;    // dist(alpha L / pi, Z)
constexpr double kNearCollisionRel = 1e-4;    // conditioning warning
constexpr double kCollisionRel = 1e-10;       // frequency equality
constexpr double kRankOneCap = 1e-3;
constexpr double kCoeffNoiseFloor = 1e-7;

struct ModeTable {
  std::vector<int> indices;  // window plus kIncident
  std::vector<double> alpha;
  std::vector<cplx> beta;
};

ModeTable build_modes(double k, double theta, double L, int window) {
  require(window >= 0, ErrorCode::InvalidArgument, "window must be >= 0");
  ModeGrid grid = ModeGrid::make(k, theta, L, window);
  ModeTable t;
  for (int n = -window; n <= window; ++n) {
    t.indices.push_back(n);
    t.alpha.push_back(grid.alpha_n(n));
    t.beta.push_back(grid.beta_n(n));
  }
  t.indices.push_back(kIncident);
  t.alpha.push_back(grid.alpha0);
  t.beta.push_back(-k * std::cos(theta));
  return t;
}

}  // namespace

int FrequencyCatalog::entry_index(int m, int n) const {
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].m == m && entries[i].n == n) return static_cast<int>(i);
  return -1;
}

const CatalogEntry& FrequencyCatalog::entry(int m, int n) const {
  int i = entry_index(m, n);
  require(i >= 0, ErrorCode::InvalidArgument, "catalog entry not present");
  return entries[i];
}

int FrequencyCatalog::reference_class(int n) const {
  int i = entry_index(n, kIncident);
  return i < 0 ? -1 : entries[i].cls;
}

bool FrequencyCatalog::reference_singleton(int n) const {
  int cls = reference_class(n);
  return cls >= 0 && classes[cls].size() == 1;
}

FrequencyCatalog catalog_frequencies(double k, double theta, double L,
                                     int window) {
  ModeTable modes = build_modes(k, theta, L, window);
  const double tol = kCollisionRel * k;

  FrequencyCatalog cat;
  cat.k = k;
  cat.theta = theta;
  cat.period = L;
  cat.window = window;
  double ratio = k * std::sin(theta) * L / kPi;
  cat.excluded_angle = std::abs(ratio - std::round(ratio)) < kExcludedAngleTol;

  const std::size_t count = modes.indices.size();
  cat.entries.reserve(count * count);
  for (std::size_t im = 0; im < count; ++im) {
    for (std::size_t in = 0; in < count; ++in) {
      CatalogEntry e;
      e.m = modes.indices[im];
      e.n = modes.indices[in];
      e.freq_alpha = modes.alpha[im] - modes.alpha[in];
      e.freq_beta = modes.beta[im] - std::conj(modes.beta[in]);
      cat.entries.push_back(e);
    }
  }

  // Group exact collisions: bucket by freq_alpha, then cluster freq_beta
  // greedily inside each bucket.
  std::vector<int> order(cat.entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return cat.entries[a].freq_alpha < cat.entries[b].freq_alpha;
  });

  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t stop = start + 1;
    while (stop < order.size() &&
           cat.entries[order[stop]].freq_alpha -
                   cat.entries[order[stop - 1]].freq_alpha <
               tol)
      ++stop;
    std::vector<int> bucket_classes;  // class ids local to this bucket
    for (std::size_t i = start; i < stop; ++i) {
      CatalogEntry& e = cat.entries[order[i]];
      int found = -1;
      for (int cls : bucket_classes) {
        const CatalogEntry& rep = cat.entries[cat.classes[cls].front()];
        if (std::abs(e.freq_beta - rep.freq_beta) < tol &&
            std::abs(e.freq_alpha - rep.freq_alpha) < tol) {
          found = cls;
          break;
        }
      }
      if (found < 0) {
        found = static_cast<int>(cat.classes.size());
        cat.classes.emplace_back();
        bucket_classes.push_back(found);
      }
      e.cls = found;
      cat.classes[found].push_back(order[i]);
    }
    start = stop;
  }

  // Near-collision scan between distinct classes (representatives only).
  const double near = kNearCollisionRel * k;
  for (std::size_t a = 0; a < cat.classes.size() && !cat.near_collision; ++a) {
    const CatalogEntry& ea = cat.entries[cat.classes[a].front()];
    for (std::size_t b = a + 1; b < cat.classes.size(); ++b) {
      const CatalogEntry& eb = cat.entries[cat.classes[b].front()];
      if (std::abs(ea.freq_alpha - eb.freq_alpha) < near &&
          std::abs(ea.freq_beta - eb.freq_beta) < near) {
        cat.near_collision = true;
        break;
      }
    }
  }
  return cat;
}

bool check_alpha_collision(double k, double theta, double L, int window) {
  ModeTable modes = build_modes(k, theta, L, window);
  double target = -modes.alpha.back();  // -alpha_inc
  for (double a : modes.alpha)
    if (std::abs(a - target) < kCollisionRel * k) return true;
  return false;
}

int recommended_window(double k, double theta, double L, double gap,
                       double evanescent_cut) {
  require(gap > 0.0, ErrorCode::InvalidArgument,
          "measurement height must exceed the profile maximum");
  ModeGrid grid = ModeGrid::make(k, theta, L, 0);
  int n = 0;
  // every propagating mode first
  while (grid.propagating(n) || grid.propagating(-n)) ++n;
  // then the evanescent margin; n now indexes the first violating pair
  while (std::min(std::abs(grid.beta_n(n)), std::abs(grid.beta_n(-n))) * gap <
         evanescent_cut)
    ++n;
  return n - 1;
}

PhaselessSamples PhaselessSamples::make(std::vector<double> x1,
                                        std::vector<double> x2,
                                        Eigen::MatrixXd intensity,
                                        PlaneWave wave,
                                        std::optional<double> period,
                                        double profile_max) {
  require(x1.size() >= 2 && x2.size() >= 2, ErrorCode::InvalidArgument,
          "intensity grid needs at least 2 points per direction");
  require(intensity.rows() == static_cast<Eigen::Index>(x1.size()) &&
              intensity.cols() == static_cast<Eigen::Index>(x2.size()),
          ErrorCode::InvalidArgument, "intensity shape mismatch");
  for (std::size_t i = 0; i + 1 < x1.size(); ++i)
    require(x1[i] < x1[i + 1], ErrorCode::InvalidArgument,
            "x1 grid must increase");
  for (std::size_t j = 0; j + 1 < x2.size(); ++j)
    require(x2[j] < x2[j + 1], ErrorCode::InvalidArgument,
            "x2 grid must increase");
  require(x2.front() > profile_max, ErrorCode::InvalidArgument,
          "intensity grid must lie strictly above the profile");
  require(intensity.minCoeff() >= -1e-12, ErrorCode::InvalidArgument,
          "intensity values must be nonnegative");

  PhaselessSamples s;
  s.x1 = std::move(x1);
  s.x2 = std::move(x2);
  s.intensity = std::move(intensity);
  s.wave = wave;
  s.period = period;
  s.profile_max = profile_max;
  return s;
}

PhaselessSamples synthesize_intensity(const RayleighExpansion& scattered,
                                      const PlaneWave& wave,
                                      std::vector<double> x1_grid,
                                      std::vector<double> x2_grid,
                                      double profile_max) {
  RayleighExpansion total = scattered.with_incident();
  Eigen::MatrixXd values(x1_grid.size(), x2_grid.size());
  for (std::size_t i = 0; i < x1_grid.size(); ++i)
    for (std::size_t j = 0; j < x2_grid.size(); ++j)
      values(i, j) = std::norm(total.value(x1_grid[i], x2_grid[j]));
  return PhaselessSamples::make(std::move(x1_grid), std::move(x2_grid),
                                std::move(values), wave,
                                scattered.grid.period, profile_max);
}

RetrievalResult retrieve_coefficients(const PhaselessSamples& samples,
                                      const FrequencyCatalog& catalog) {
  const std::size_t n1 = samples.x1.size();
  const std::size_t n2 = samples.x2.size();
  const std::size_t rows = n1 * n2;
  const std::size_t cols = catalog.classes.size();

  // Nyquist in both directions against the dictionary frequencies.
  double max_fa = 0.0, max_fb = 0.0, dx1 = 0.0, dx2 = 0.0;
  for (const auto& cls : catalog.classes) {
    const CatalogEntry& rep = catalog.entries[cls.front()];
    max_fa = std::max(max_fa, std::abs(rep.freq_alpha));
    max_fb = std::max(max_fb, std::abs(rep.freq_beta.real()));
  }
  for (std::size_t i = 0; i + 1 < n1; ++i)
    dx1 = std::max(dx1, samples.x1[i + 1] - samples.x1[i]);
  for (std::size_t j = 0; j + 1 < n2; ++j)
    dx2 = std::max(dx2, samples.x2[j + 1] - samples.x2[j]);
  if (max_fa * dx1 >= kPi || max_fb * dx2 >= kPi) {
    std::ostringstream msg;
    msg << "grid spacing (" << dx1 << ", " << dx2
        << ") cannot resolve catalog frequencies (" << max_fa << ", " << max_fb
        << ")";
    fail(ErrorCode::NyquistViolated, msg.str());
  }

  Eigen::MatrixXcd A(rows, cols);
  Eigen::VectorXcd y(rows);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j)
      y(i * n2 + j) = samples.intensity(i, j);
  for (std::size_t c = 0; c < cols; ++c) {
    const CatalogEntry& rep = catalog.entries[catalog.classes[c].front()];
    for (std::size_t i = 0; i < n1; ++i) {
      cplx px1 =
          std::exp(cplx(0.0, rep.freq_alpha * samples.x1[i]));
      for (std::size_t j = 0; j < n2; ++j) {
        cplx px2 = std::exp(cplx(0.0, 1.0) * rep.freq_beta * samples.x2[j]);
        A(i * n2 + j, c) = px1 * px2;
      }
    }
  }

  // Classes whose column cannot move the data above ~1e-8 of its norm are
  // unrecoverable from these measurements: they are excluded from the fit
  // and their coefficients reported as zero.  (Deep evanescent cross terms
  // form nearly collinear sets of such columns; fitting them would only
  // spread large cancelling values.)  The surviving columns are equilibrated
  // and solved by minimum-norm SVD.
  Eigen::VectorXd col_norms(cols);
  double max_col = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    col_norms(c) = A.col(c).norm();
    max_col = std::max(max_col, col_norms(c));
  }
  const double col_floor = 1e-8 * max_col;
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < cols; ++c)
    if (col_norms(c) >= col_floor) kept.push_back(c);

  Eigen::MatrixXcd Ak(rows, kept.size());
  for (std::size_t kc = 0; kc < kept.size(); ++kc)
    Ak.col(kc) = A.col(kept[kc]) / col_norms(kept[kc]);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(Ak, Eigen::ComputeThinU |
                                              Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  Eigen::VectorXcd scaled = svd.solve(y);
  double fit_residual = (Ak * scaled - y).norm() / y.norm();

  // A class is recoverable only when its coefficient uncertainty under the
  // achieved data accuracy stays below kCoeffNoiseFloor; nearly collinear
  // deep evanescent columns amplify measurement noise exponentially and are
  // reported as zero instead of as noise.
  const double eps_data =
      std::max((Ak * scaled - y).norm(), 1e-14 * y.norm());
  const auto& sv = svd.singularValues();
  const Eigen::Index rank = svd.rank();
  Eigen::VectorXcd coeffs = Eigen::VectorXcd::Zero(cols);
  int unresolved = 0;
  for (std::size_t kc = 0; kc < kept.size(); ++kc) {
    double var = 0.0;
    for (Eigen::Index j = 0; j < rank; ++j)
      var += std::norm(svd.matrixV()(static_cast<Eigen::Index>(kc), j)) /
             (sv(j) * sv(j));
    double uncertainty = std::sqrt(var) * eps_data / col_norms(kept[kc]);
    if (uncertainty > kCoeffNoiseFloor) {
      ++unresolved;
      continue;  // coefficient stays zero
    }
    coeffs(kept[kc]) = scaled(kc) / col_norms(kept[kc]);
  }

  RetrievalResult result;
  result.excluded_angle = catalog.excluded_angle;
  result.fit_residual = fit_residual;
  result.dictionary_classes = static_cast<int>(cols);
  result.unresolved_classes = unresolved;

  for (int n = -catalog.window; n <= catalog.window; ++n) {
    int cls = catalog.reference_class(n);
    result.coefficients[n] = coeffs(cls);
    if (!catalog.reference_singleton(n)) result.collided_reference.push_back(n);
  }
  result.unique = !result.excluded_angle && result.collided_reference.empty();

  // Rank-one consistency in the data norm: the recovered coefficient vector
  // predicts class sums a_m conj(a_n); the defect compares the fitted and
  // predicted intensities on the grid, which correctly discounts classes the
  // data cannot see.
  auto a_hat = [&](int idx) -> cplx {
    if (idx == kIncident) return cplx(1.0, 0.0);
    auto it = result.coefficients.find(idx);
    return it == result.coefficients.end() ? cplx(0.0, 0.0) : it->second;
  };
  Eigen::VectorXcd predicted_scaled(kept.size());
  for (std::size_t kc = 0; kc < kept.size(); ++kc) {
    cplx predicted(0.0, 0.0);
    for (int idx : catalog.classes[kept[kc]]) {
      const CatalogEntry& e = catalog.entries[idx];
      predicted += a_hat(e.m) * std::conj(a_hat(e.n));
    }
    predicted_scaled(kc) = predicted * col_norms(kept[kc]);
  }
  double den = (Ak * scaled).norm();
  result.rank_one_defect =
      den > 0.0 ? (Ak * (scaled - predicted_scaled)).norm() / den : 0.0;

  if (result.unique && result.rank_one_defect > kRankOneCap) {
    std::ostringstream msg;
    msg << "rank-one defect " << result.rank_one_defect
        << " exceeds " << kRankOneCap
        << "; data inconsistent with a single quasi-periodic field";
    fail(ErrorCode::RankOneDefectHigh, msg.str());
  }
  return result;
}

RoundtripReport roundtrip(const GratingProfile& profile, const PlaneWave& wave,
                          const RoundtripConfig& config) {
  RoundtripReport report;
  report.solution = solve_dirichlet(profile, wave, config.forward);

  double h = config.height > 0.0 ? config.height : profile.max_height + 1.0;
  require(h > profile.max_height, ErrorCode::InvalidArgument,
          "measurement height must exceed the profile maximum");
  double gap = h - profile.max_height;
  int window = recommended_window(wave.k, wave.theta, profile.period, gap,
                                  config.evanescent_cut);
  FrequencyCatalog catalog =
      catalog_frequencies(wave.k, wave.theta, profile.period, window);

  std::vector<double> x1(config.nx1), x2(config.nx2);
  for (int i = 0; i < config.nx1; ++i)
    x1[i] = profile.period * i / config.nx1;
  for (int j = 0; j < config.nx2; ++j)
    x2[j] = h + config.height_extent * j / (config.nx2 - 1);
  PhaselessSamples samples = synthesize_intensity(
      report.solution.expansion, wave, std::move(x1), std::move(x2),
      profile.max_height);

  report.retrieval = retrieve_coefficients(samples, catalog);
  if (!report.retrieval.unique) return report;  // no discrepancy claimed

  double max_err = 0.0, max_phase = 0.0;
  for (const auto& [n, recovered] : report.retrieval.coefficients) {
    cplx truth = report.solution.expansion.coeff(n);
    max_err = std::max(max_err, std::abs(recovered - truth));
    if (std::abs(truth) > 1e-4) {
      double phase = std::abs(std::arg(recovered / truth));
      max_phase = std::max(max_phase, phase);
    }
  }
  report.max_coeff_error = max_err;
  report.max_phase_error = max_phase;
  return report;
}

namespace {

struct PursuitMode {
  double freq;
  cplx amplitude;
};

// Periodogram peak picking with cyclic re-refinement: each new mode comes
// from the residual periodogram, then every frequency is re-polished on the
// trace with all other modes subtracted, so neighbouring sidelobes do not
// bias the estimates.  Assumes near-noiseless data.
std::vector<PursuitMode> extract_modes(const std::vector<double>& x,
                                       const Eigen::VectorXcd& y,
                                       int max_modes,
                                       double residual_rel_tol) {
  const std::size_t n = x.size();
  const double base_norm = y.norm();
  if (base_norm == 0.0) return {};

  double dx = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) dx = std::max(dx, x[j + 1] - x[j]);
  const double wmax = kPi / dx;
  const int coarse = static_cast<int>(8 * n);

  auto newton_peak = [&](const Eigen::VectorXcd& data, double w) {
    for (int it = 0; it < 60; ++it) {
      cplx s(0.0, 0.0), s1(0.0, 0.0), s2(0.0, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        cplx e = data(j) * std::exp(cplx(0.0, -w * x[j]));
        s += e;
        s1 += cplx(0.0, -x[j]) * e;
        s2 += cplx(0.0, -x[j]) * cplx(0.0, -x[j]) * e;
      }
      double f1 = 2.0 * std::real(std::conj(s) * s1);
      double f2 = 2.0 * (std::norm(s1) + std::real(std::conj(s) * s2));
      if (f2 >= 0.0) break;
      double step = f1 / f2;
      w -= step;
      if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(w))) break;
    }
    return w;
  };

  std::vector<double> freqs;
  Eigen::VectorXcd resid = y;
  Eigen::VectorXcd amps;

  auto refit = [&] {
    Eigen::MatrixXcd E(n, freqs.size());
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t q = 0; q < freqs.size(); ++q)
        E(j, q) = std::exp(cplx(0.0, freqs[q] * x[j]));
    amps = E.colPivHouseholderQr().solve(y);
    resid = y - E * amps;
  };

  for (int mode = 0; mode < max_modes; ++mode) {
    if (resid.norm() < residual_rel_tol * base_norm) break;

    double best_w = 0.0, best_mag = -1.0;
    for (int i = 0; i <= coarse; ++i) {
      double w = -wmax + 2.0 * wmax * i / coarse;
      cplx s(0.0, 0.0);
      for (std::size_t j = 0; j < n; ++j)
        s += resid(j) * std::exp(cplx(0.0, -w * x[j]));
      if (std::abs(s) > best_mag) {
        best_mag = std::abs(s);
        best_w = w;
      }
    }
    freqs.push_back(newton_peak(resid, best_w));
    refit();

    for (int pass = 0; pass < 12; ++pass) {
      double moved = 0.0;
      for (std::size_t q = 0; q < freqs.size(); ++q) {
        Eigen::VectorXcd cleaned = y;
        for (std::size_t r = 0; r < freqs.size(); ++r) {
          if (r == q) continue;
          for (std::size_t j = 0; j < n; ++j)
            cleaned(j) -= amps(static_cast<Eigen::Index>(r)) *
                          std::exp(cplx(0.0, freqs[r] * x[j]));
        }
        double w = newton_peak(cleaned, freqs[q]);
        moved = std::max(moved, std::abs(w - freqs[q]));
        freqs[q] = w;
      }
      refit();
      if (moved < 1e-12) break;
    }
  }

  std::vector<PursuitMode> modes;
  for (std::size_t q = 0; q < freqs.size(); ++q)
    modes.push_back({freqs[q], amps(static_cast<Eigen::Index>(q))});
  return modes;
}

}  // namespace

PeriodEstimate estimate_period(const std::vector<double>& x1,
                               const std::vector<cplx>& scattered_on_line,
                               double k, double theta, double candidate_max) {
  require(x1.size() == scattered_on_line.size(), ErrorCode::InvalidArgument,
          "sample/value count mismatch");
  require(x1.size() >= 16, ErrorCode::InvalidArgument,
          "period estimation needs at least 16 samples");
  for (std::size_t j = 0; j + 1 < x1.size(); ++j)
    require(x1[j] < x1[j + 1], ErrorCode::InvalidArgument,
            "sample abscissae must increase");
  require(candidate_max > 0.0, ErrorCode::InvalidArgument,
          "candidate_max must be positive");
  require(x1.back() - x1.front() >= candidate_max, ErrorCode::InvalidArgument,
          "samples must cover an interval of at least candidate_max");
  PlaneWave wave = PlaneWave::make(k, theta);

  Eigen::VectorXcd g(x1.size());
  for (std::size_t j = 0; j < x1.size(); ++j)
    g(static_cast<Eigen::Index>(j)) =
        std::exp(cplx(0.0, -wave.alpha * x1[j])) * scattered_on_line[j];

  std::vector<PursuitMode> modes = extract_modes(x1, g, 48, 1e-9);

  double amax = 0.0;
  for (const PursuitMode& m : modes) amax = std::max(amax, std::abs(m.amplitude));
  // any admissible period L <= candidate_max implies |omega| >= 2 pi / L
  const double dc_floor = kPi / candidate_max;

  PeriodEstimate out;
  for (const PursuitMode& m : modes) {
    if (std::abs(m.amplitude) < 1e-6 * amax) continue;
    if (std::abs(m.freq) < dc_floor) continue;
    out.frequencies.push_back(m.freq);
  }
  std::sort(out.frequencies.begin(), out.frequencies.end());

  if (out.frequencies.empty()) {
    out.degenerate = true;  // every candidate period is compatible
    return out;
  }

  double w0 = std::abs(out.frequencies.front());
  for (double w : out.frequencies) w0 = std::min(w0, std::abs(w));
  const double int_tol = 1e-6;
  int qmax = static_cast<int>(
      std::floor(candidate_max * w0 / (2.0 * kPi) + int_tol));
  for (int q = 1; q <= qmax; ++q) {
    double L = 2.0 * kPi * q / w0;
    if (L > candidate_max * (1.0 + 1e-9)) continue;
    bool ok = true;
    for (double w : out.frequencies) {
      double r = w * L / (2.0 * kPi);
      if (std::abs(r - std::round(r)) > int_tol) {
        ok = false;
        break;
      }
    }
    if (ok) out.candidates.push_back(L);
  }
  require(!out.candidates.empty(), ErrorCode::FrequenciesIncommensurate,
          "no period up to candidate_max is compatible with the detected "
          "frequencies");
  return out;
}

}  // namespace grating
