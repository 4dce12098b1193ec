#include "grating/profile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace grating {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr int kScanSamples = 4096;
}  // namespace

GratingProfile GratingProfile::make(double period, double offset,
                                    std::vector<double> cos_coeffs,
                                    std::vector<double> sin_coeffs) {
  require(period > 0.0, ErrorCode::InvalidArgument, "period must be positive");
  GratingProfile p;
  p.period = period;
  p.offset = offset;
  p.cos_coeffs = std::move(cos_coeffs);
  p.sin_coeffs = std::move(sin_coeffs);
  p.min_height = p.max_height = p.offset;
  if (p.degree() > 0) {
    double lo = p(0.0), hi = p(0.0);
    for (int i = 1; i < kScanSamples; ++i) {
      double v = p(period * i / kScanSamples);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    p.min_height = lo;
    p.max_height = hi;
  }
  return p;
}

GratingProfile GratingProfile::flat(double period, double height) {
  return make(period, height);
}

double GratingProfile::operator()(double x1) const {
  double w = 2.0 * kPi / period;
  double f = offset;
  for (std::size_t j = 0; j < cos_coeffs.size(); ++j)
    f += cos_coeffs[j] * std::cos(w * (j + 1) * x1);
  for (std::size_t j = 0; j < sin_coeffs.size(); ++j)
    f += sin_coeffs[j] * std::sin(w * (j + 1) * x1);
  return f;
}

double GratingProfile::slope(double x1) const {
  double w = 2.0 * kPi / period;
  double df = 0.0;
  for (std::size_t j = 0; j < cos_coeffs.size(); ++j)
    df -= cos_coeffs[j] * w * (j + 1) * std::sin(w * (j + 1) * x1);
  for (std::size_t j = 0; j < sin_coeffs.size(); ++j)
    df += sin_coeffs[j] * w * (j + 1) * std::cos(w * (j + 1) * x1);
  return df;
}

int GratingProfile::degree() const {
  return static_cast<int>(std::max(cos_coeffs.size(), sin_coeffs.size()));
}

GratingProfile GratingProfile::shifted(double s) const {
  // cos(w j (x - s)) = cos(wjx) cos(wjs) + sin(wjx) sin(wjs), likewise sin.
  double w = 2.0 * kPi / period;
  int D = degree();
  std::vector<double> c(D, 0.0), d(D, 0.0);
  for (int j = 1; j <= D; ++j) {
    double a = j <= static_cast<int>(cos_coeffs.size()) ? cos_coeffs[j - 1] : 0.0;
    double b = j <= static_cast<int>(sin_coeffs.size()) ? sin_coeffs[j - 1] : 0.0;
    double cs = std::cos(w * j * s), sn = std::sin(w * j * s);
    c[j - 1] = a * cs - b * sn;
    d[j - 1] = a * sn + b * cs;
  }
  return make(period, offset, std::move(c), std::move(d));
}

bool GratingProfile::is_flat() const {
  for (double v : cos_coeffs)
    if (v != 0.0) return false;
  for (double v : sin_coeffs)
    if (v != 0.0) return false;
  return true;
}

}  // namespace grating
