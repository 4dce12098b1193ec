#include "grating/waveguide.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "grating/parallel.hpp"

namespace grating {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCandidateImagTol = 1e-6;
constexpr double kMuResidualTol = 1e-8;
// Companion linearization splits a defective double root by about
// sqrt(machine epsilon) = 1.5e-8, so merging at the nominal 1e-8 would
// report phantom pairs; 1e-7 absorbs the split and still resolves far more
// finely than the 1e-6 reporting tolerance.  The same guard keeps halves of
// a boundary double root at mu = +-1 out of the open interval.
constexpr double kMuMergeRelTol = 1e-7;
constexpr double kMuBoundaryGuard = 1e-7;

void gauss_legendre_01(int n, std::vector<double>& nodes,
                       std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double p0 = 0.0, dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      p0 = 1.0;
      double p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * t * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (t * p0 - p1) / (t * t - 1.0);
      double dt = -p0 / dp;
      t += dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double w = 2.0 / ((1.0 - t * t) * dp * dp);
    nodes[i] = (1.0 - t) / 2.0;
    nodes[n - 1 - i] = (1.0 + t) / 2.0;
    weights[i] = weights[n - 1 - i] = w / 2.0;
  }
}

struct CellForms {
  Eigen::MatrixXcd S;   // grad . grad
  Eigen::MatrixXcd G1;  // -i (d1 w psi* - w d1 psi*), Hermitian
  Eigen::MatrixXcd M0;  // mass
  int dim = 0;
};

// Transverse modal basis on t in [0, 1]: with s = 2t - 1,
//   phi_q(t) = (L_{q+1}(s) - L_{q-1}(s)) / sqrt(4q + 2),   q = 1..Q,
// which vanishes at both walls and has the derivative identity
// phi_q' = (2q + 1) L_q / sqrt(4q + 2) * ds/dt.  Polynomial, so the
// t-quadrature below is exact and the convergence stays spectral for
// analytic cells.
void legendre_basis(int Q, double t, std::vector<double>& value,
                    std::vector<double>& deriv) {
  double s = 2.0 * t - 1.0;
  std::vector<double> L(Q + 2);
  L[0] = 1.0;
  L[1] = s;
  for (int n = 1; n <= Q; ++n)
    L[n + 1] = ((2.0 * n + 1.0) * s * L[n] - n * L[n - 1]) / (n + 1.0);
  value.resize(Q + 1);
  deriv.resize(Q + 1);
  for (int q = 1; q <= Q; ++q) {
    double scale = 1.0 / std::sqrt(4.0 * q + 2.0);
    value[q] = (L[q + 1] - L[q - 1]) * scale;
    deriv[q] = 2.0 * (2.0 * q + 1.0) * L[q] * scale;  // d/dt
  }
}

Eigen::MatrixXcd gram(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B,
                      const Eigen::ArrayXd& w) {
  Eigen::MatrixXcd Bs = B * w.matrix().asDiagonal();
  return A.conjugate() * Bs.transpose();
}

Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& X) {
  return 0.5 * (X + X.adjoint());
}

CellForms assemble_forms(const WaveguideCell& cell) {
  const int P = cell.fourier_modes;
  const int Q = cell.transverse_modes;
  require(2 * P + 1 >= 3 && Q >= 3, ErrorCode::ResolutionTooLow,
          "need at least 3 basis functions per direction");

  const GratingProfile& f1 = cell.lower;
  const GratingProfile& f2 = cell.upper;
  {
    double gap = f2(0.0) - f1(0.0);
    for (int i = 1; i < 4096; ++i)
      gap = std::min(gap, f2(2.0 * kPi * i / 4096.0) - f1(2.0 * kPi * i / 4096.0));
    require(gap > 0.0, ErrorCode::CurvesIntersect,
            "waveguide boundary curves intersect");
  }

  const int deg = std::max(f1.degree(), f2.degree());
  const int n1 = std::max(64, 6 * (P + deg) + 48);
  const int nt = Q + 4;  // exact for the polynomial t-integrands
  std::vector<double> tq, tw;
  gauss_legendre_01(nt, tq, tw);

  const int D = (2 * P + 1) * Q;
  const int cols = n1 * nt;
  Eigen::MatrixXcd V(D, cols), D1(D, cols), Dt(D, cols);
  Eigen::ArrayXd w(cols), we(cols), wg(cols), wgge(cols);
  Eigen::ArrayXd goe(cols);  // g / e per node

  std::vector<double> tv, td;
  for (int a = 0; a < n1; ++a) {
    double x1 = 2.0 * kPi * a / n1;
    double e = f2(x1) - f1(x1);
    double f1p = f1.slope(x1);
    double ep = f2.slope(x1) - f1p;
    for (int b = 0; b < nt; ++b) {
      int col = a * nt + b;
      double t = tq[b];
      double g = f1p + t * ep;
      double wq = (2.0 * kPi / n1) * tw[b];
      w(col) = wq;
      we(col) = wq * e;
      wg(col) = wq * g;
      wgge(col) = wq * (g * g + 1.0) / e;
      goe(col) = g / e;
      legendre_basis(Q, t, tv, td);
      for (int p = -P; p <= P; ++p) {
        cplx E = std::exp(cplx(0.0, p * x1));
        cplx dE = cplx(0.0, static_cast<double>(p)) * E;
        for (int q = 1; q <= Q; ++q) {
          int row = (p + P) * Q + (q - 1);
          V(row, col) = E * tv[q];
          D1(row, col) = dE * tv[q];
          Dt(row, col) = E * td[q];
        }
      }
    }
  }

  CellForms forms;
  forms.dim = D;
  forms.S = gram(D1, D1, we) - gram(Dt, D1, wg) - gram(D1, Dt, wg) +
            gram(Dt, Dt, wgge);
  forms.S = hermitian_part(forms.S);

  // physical d1 on the mapped rectangle: d1 - (g/e) dt
  Eigen::MatrixXcd D1p = D1 - Dt * goe.matrix().asDiagonal();
  Eigen::MatrixXcd X = gram(V, D1p, we);
  forms.G1 = cplx(0.0, -1.0) * (X - X.adjoint());

  forms.M0 = hermitian_part(gram(V, V, we));
  return forms;
}

}  // namespace

WaveguideCell WaveguideCell::make(const GratingProfile& lower,
                                  const GratingProfile& upper,
                                  int fourier_modes, int transverse_modes) {
  require(std::abs(lower.period - upper.period) <
              1e-12 * std::max(lower.period, upper.period),
          ErrorCode::InvalidArgument, "profiles must share one period");
  WaveguideCell cell;
  double scale = 2.0 * kPi / lower.period;
  auto rescale = [&](const GratingProfile& p) {
    std::vector<double> c = p.cos_coeffs, s = p.sin_coeffs;
    for (double& v : c) v *= scale;
    for (double& v : s) v *= scale;
    return GratingProfile::make(2.0 * kPi, p.offset * scale, std::move(c),
                                std::move(s));
  };
  cell.lower = rescale(lower);
  cell.upper = rescale(upper);
  cell.length_scale = scale;
  cell.fourier_modes = fourier_modes;
  cell.transverse_modes = transverse_modes;
  return cell;
}

bool WaveguideCell::is_straight_strip() const {
  return lower.is_flat() && upper.is_flat();
}

std::string WaveguideCell::id() const {
  std::ostringstream out;
  if (is_straight_strip()) {
    out << "strip h=" << (upper.offset - lower.offset);
  } else {
    out << "cell deg=" << std::max(lower.degree(), upper.degree())
        << " gap=" << (upper.offset - lower.offset);
  }
  out << " P=" << fourier_modes << " Q=" << transverse_modes;
  return out.str();
}

QuadraticPencil assemble_pencil(const WaveguideCell& cell, double k) {
  require(k > 0.0, ErrorCode::InvalidArgument, "wavenumber must be positive");
  const double ks = k / cell.length_scale;  // wavenumber on the 2 pi cell
  CellForms forms = assemble_forms(cell);

  Eigen::LLT<Eigen::MatrixXcd> llt(forms.S);
  require(llt.info() == Eigen::Success, ErrorCode::IllConditioned,
          "stiffness form is not positive definite");
  auto L = llt.matrixL();

  auto reduce = [&](const Eigen::MatrixXcd& X) {
    Eigen::MatrixXcd half = L.solve(X);
    Eigen::MatrixXcd full = L.solve(half.adjoint()).adjoint();
    return hermitian_part(full);
  };

  QuadraticPencil pencil;
  pencil.dim = forms.dim;
  pencil.B = reduce(ks * forms.G1);
  pencil.C = reduce(ks * ks * forms.M0);
  pencil.k = k;
  pencil.cell_id = cell.id();
  pencil.fourier_modes = cell.fourier_modes;
  pencil.transverse_modes = cell.transverse_modes;
  pencil.basis_transform = llt.matrixU();
  return pencil;
}

MuSpectrum mu_eigenvalues(const QuadraticPencil& pencil) {
  const int D = pencil.dim;
  require(D > 0, ErrorCode::InvalidArgument, "pencil not assembled");

  Eigen::LLT<Eigen::MatrixXcd> cllt(pencil.C);
  require(cllt.info() == Eigen::Success, ErrorCode::LinearizationSingular,
          "mass block of the companion linearization is singular");

  Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(D, D);
  Eigen::MatrixXcd F = Eigen::MatrixXcd::Zero(2 * D, 2 * D);
  F.topRightCorner(D, D) = I;
  F.bottomLeftCorner(D, D) = cllt.solve(pencil.C - I);
  F.bottomRightCorner(D, D) = -cllt.solve(pencil.B);

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(F, false);
  require(ces.info() == Eigen::Success, ErrorCode::LinearizationSingular,
          "companion eigensolver failed");

  // For real mu the pencil H(mu) = I + mu B + (mu^2 - 1) C is Hermitian and
  // its smallest-magnitude eigenvalue equals the optimal residual
  // ||H(mu) w|| / ||w||.  Near-real companion eigenvalues are polished on
  // the real axis by Newton on that eigenvalue, which also repairs the
  // sqrt(eps) splitting of defective double roots.
  const double lam_floor =
      1e-14 * (1.0 + pencil.B.norm() + 2.0 * pencil.C.norm());
  auto smallest_eig = [&](double mu, double* slope) {
    Eigen::MatrixXcd H = I + mu * pencil.B + (mu * mu - 1.0) * pencil.C;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    Eigen::Index idx = 0;
    es.eigenvalues().cwiseAbs().minCoeff(&idx);
    if (slope) {
      Eigen::VectorXcd v = es.eigenvectors().col(idx);
      *slope =
          std::real(v.dot(pencil.B * v + 2.0 * mu * (pencil.C * v)));
    }
    return es.eigenvalues()(idx);
  };

  struct RealEig {
    double mu;
    double residual;
  };
  std::vector<RealEig> accepted;
  MuSpectrum spec;
  spec.k = pencil.k;

  for (int i = 0; i < 2 * D; ++i) {
    cplx mu0 = ces.eigenvalues()(i);
    if (std::abs(mu0.imag()) > kCandidateImagTol ||
        std::abs(mu0.real()) > 1.0 + kCandidateImagTol) {
      spec.complex_mu.push_back(mu0);
      continue;
    }
    double mu = mu0.real();
    for (int it = 0; it < 50; ++it) {
      double slope = 0.0;
      double lam = smallest_eig(mu, &slope);
      if (std::abs(lam) < lam_floor || slope == 0.0) break;
      double step = lam / slope;
      mu -= step;
      if (std::abs(step) < 1e-15) break;
    }
    {
      // At a defective double root lambda_s(mu) only touches zero and Newton
      // stalls at the noise floor; a three-point parabola vertex pins the
      // touch point far below that floor.
      const double d = 1e-6;
      double l0 = smallest_eig(mu, nullptr);
      double lp = smallest_eig(mu + d, nullptr);
      double lm = smallest_eig(mu - d, nullptr);
      if ((lp > l0) == (lm > l0)) {
        double A2 = (lp + lm - 2.0 * l0) / (d * d);  // twice the curvature
        double B1 = (lp - lm) / (2.0 * d);           // slope at mu
        double step = A2 != 0.0 ? B1 / A2 : 0.0;
        if (std::abs(step) < d) mu -= step;
      }
    }
    double residual = std::abs(smallest_eig(mu, nullptr));
    if (residual < kMuResidualTol &&
        std::abs(mu) < 1.0 - kMuBoundaryGuard) {
      accepted.push_back({mu, residual});
    } else {
      spec.complex_mu.push_back(mu0);
    }
  }

  std::sort(accepted.begin(), accepted.end(),
            [](const RealEig& a, const RealEig& b) { return a.mu < b.mu; });
  std::sort(spec.complex_mu.begin(), spec.complex_mu.end(),
            [](cplx a, cplx b) {
              return a.real() != b.real() ? a.real() < b.real()
                                          : a.imag() < b.imag();
            });

  for (std::size_t i = 0; i < accepted.size();) {
    double mu = accepted[i].mu;
    double res = accepted[i].residual;
    std::size_t j = i + 1;
    while (j < accepted.size() &&
           std::abs(accepted[j].mu - mu) <
               kMuMergeRelTol * std::max(1.0, std::abs(mu))) {
      res = std::max(res, accepted[j].residual);
      ++j;
    }
    spec.real_mu.push_back(mu);
    spec.multiplicity.push_back(static_cast<int>(j - i));
    spec.residuals.push_back(res);
    i = j;
  }
  return spec;
}

DispersionCurve dispersion_sweep(const WaveguideCell& cell,
                                 const std::vector<double>& alpha_grid,
                                 int band_count, int workers) {
  require(band_count >= 1, ErrorCode::InvalidArgument,
          "band count must be >= 1");
  CellForms forms = assemble_forms(cell);
  require(band_count <= forms.dim, ErrorCode::ResolutionTooLow,
          "more bands requested than basis functions");

  DispersionCurve curve;
  curve.alpha_grid = alpha_grid;
  curve.bands.resize(static_cast<Eigen::Index>(alpha_grid.size()), band_count);

  parallel_for(alpha_grid.size(), workers, [&](std::size_t i) {
    double a = alpha_grid[i];
    Eigen::MatrixXcd Sa = forms.S + a * forms.G1 + (a * a) * forms.M0;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> ges(
        Sa, forms.M0, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    require(ges.info() == Eigen::Success, ErrorCode::IllConditioned,
            "generalized eigensolve failed during dispersion sweep");
    for (int j = 0; j < band_count; ++j)
      curve.bands(static_cast<Eigen::Index>(i), j) = ges.eigenvalues()(j);
  });
  return curve;
}

double strip_dispersion(double h, double alpha, int n, int m) {
  require(h > 0.0, ErrorCode::InvalidArgument, "strip height must be positive");
  require(m >= 1, ErrorCode::InvalidArgument, "transverse index must be >= 1");
  double a = alpha + n;
  double b = m * kPi / h;
  return a * a + b * b;
}

FlatBandReport flat_band_scan(const DispersionCurve& curve, double tol) {
  require(curve.alpha_grid.size() >= 11, ErrorCode::InvalidArgument,
          "flat-band scan needs at least 11 sample points");
  FlatBandReport report;
  for (int j = 0; j < curve.bands.cols(); ++j) {
    double variation =
        curve.bands.col(j).maxCoeff() - curve.bands.col(j).minCoeff();
    report.variations.push_back(variation);
    if (variation < tol) report.flat_bands.push_back(j + 1);
  }
  return report;
}

namespace {

// Root of the parabola through (x0,y0),(x1,y1),(x2,y2) inside [lo, hi];
// falls back to the secant root of the bracketing pair.
double refine_root(double x0, double y0, double x1, double y1, double x2,
                   double y2, double lo, double hi) {
  double d0 = (x0 - x1) * (x0 - x2);
  double d1 = (x1 - x0) * (x1 - x2);
  double d2 = (x2 - x0) * (x2 - x1);
  // quadratic coefficients via Lagrange
  double a = y0 / d0 + y1 / d1 + y2 / d2;
  double b = -y0 * (x1 + x2) / d0 - y1 * (x0 + x2) / d1 - y2 * (x0 + x1) / d2;
  double c = y0 * x1 * x2 / d0 + y1 * x0 * x2 / d1 + y2 * x0 * x1 / d2;
  double span = hi - lo;
  if (std::abs(a) > 1e-14) {
    double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      double sq = std::sqrt(disc);
      double r1 = (-b + sq) / (2.0 * a), r2 = (-b - sq) / (2.0 * a);
      for (double root : {r1, r2})
        if (root >= lo && root <= hi) return root;
      for (double root : {r1, r2})
        if (root >= lo - 0.25 * span && root <= hi + 0.25 * span)
          return std::clamp(root, lo, hi);
    }
  }
  return x1 - y1 * (x2 - x1) / (y2 - y1);  // secant on the bracket
}

double secant_root(double x0, double y0, double x1, double y1) {
  return x0 - y0 * (x1 - x0) / (y1 - y0);
}

}  // namespace

std::vector<double> mu_from_dispersion(const DispersionCurve& curve, double k) {
  require(k > 0.0, ErrorCode::InvalidArgument, "wavenumber must be positive");
  const auto& grid = curve.alpha_grid;
  const int npts = static_cast<int>(grid.size());
  require(npts >= 5, ErrorCode::InvalidArgument,
          "dispersion curve too coarsely sampled for root finding");
  for (int i = 0; i + 1 < npts; ++i)
    require(grid[i] < grid[i + 1], ErrorCode::InvalidArgument,
            "alpha grid must be strictly increasing");

  const double k2 = k * k;
  const int bands = static_cast<int>(curve.bands.cols());
  require(k2 <= curve.bands.col(bands - 1).minCoeff(),
          ErrorCode::BandRangeExceeded,
          "k^2 exceeds the top sampled band; root set would be incomplete");

  const double zero_tol = 1e-12 * k2;
  const double touch_tol = 1e-6 * k2;
  std::vector<double> zone_roots;

  for (int j = 0; j < bands; ++j) {
    auto y = [&](int i) { return curve.bands(i, j) - k2; };
    std::vector<bool> consumed(npts, false);
    // exact hits at grid points
    for (int i = 0; i < npts; ++i) {
      if (std::abs(y(i)) <= zero_tol) {
        zone_roots.push_back(grid[i]);
        consumed[i] = true;
      }
    }
    // transversal crossings
    for (int i = 0; i + 1 < npts; ++i) {
      if (consumed[i] || consumed[i + 1]) continue;
      if (y(i) * y(i + 1) < 0.0) {
        int lo = std::max(0, i - 1);
        int hi = std::min(npts - 1, i + 2);
        double r1 = refine_root(grid[lo], y(lo), grid[i], y(i), grid[i + 1],
                                y(i + 1), grid[i], grid[i + 1]);
        double r2 = refine_root(grid[i], y(i), grid[i + 1], y(i + 1), grid[hi],
                                y(hi), grid[i], grid[i + 1]);
        // the two stencils agree away from band-crossing kinks
        zone_roots.push_back(std::abs(r1 - r2) < 1e-6
                                 ? 0.5 * (r1 + r2)
                                 : secant_root(grid[i], y(i), grid[i + 1],
                                               y(i + 1)));
      }
    }
    // tangential touches at interior minima that never change sign
    for (int i = 1; i + 1 < npts; ++i) {
      if (consumed[i - 1] || consumed[i] || consumed[i + 1]) continue;
      if (y(i) > zero_tol && y(i) <= y(i - 1) && y(i) <= y(i + 1) &&
          (y(i) < y(i - 1) || y(i) < y(i + 1)) && y(i) < touch_tol) {
        // vertex of y = A (x - x_i)^2 + B (x - x_i) + y_i
        double d01 = y(i - 1) - y(i), d21 = y(i + 1) - y(i);
        double h0 = grid[i] - grid[i - 1], h2 = grid[i + 1] - grid[i];
        double A = (d01 / h0 + d21 / h2) / (h0 + h2);
        if (A <= 0.0) continue;
        double B = d21 / h2 - A * h2;
        double vertex_y = y(i) - B * B / (4.0 * A);
        if (std::abs(vertex_y) < touch_tol)
          zone_roots.push_back(grid[i] - B / (2.0 * A));
      }
    }
  }

  std::vector<double> mus;
  for (double root : zone_roots) {
    int smin = static_cast<int>(std::ceil(-k - root));
    int smax = static_cast<int>(std::floor(k - root));
    for (int s = smin; s <= smax; ++s) {
      double mu = (root + s) / k;
      if (std::abs(mu) < 1.0) mus.push_back(mu);
    }
  }
  std::sort(mus.begin(), mus.end());
  std::vector<double> out;
  for (double mu : mus) {
    if (out.empty() || std::abs(mu - out.back()) >
                           kMuMergeRelTol * std::max(1.0, std::abs(mu)))
      out.push_back(mu);
  }
  return out;
}

}  // namespace grating
