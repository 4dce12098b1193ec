#pragma once

#include <vector>

#include "grating/errors.hpp"

namespace grating {

// Periodic graph curve x2 = f(x1) stored as a truncated real Fourier series
//   f(x1) = offset + sum_j cos_coeffs[j-1] cos(2 pi j x1 / L)
//                  + sum_j sin_coeffs[j-1] sin(2 pi j x1 / L).
// Smooth by construction; min/max over one period are cached at build time.
struct GratingProfile {
  double period = 0.0;
  double offset = 0.0;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;
  double min_height = 0.0;
  double max_height = 0.0;

  static GratingProfile make(double period, double offset,
                             std::vector<double> cos_coeffs = {},
                             std::vector<double> sin_coeffs = {});
  static GratingProfile flat(double period, double height);

  double operator()(double x1) const;
  double slope(double x1) const;
  int degree() const;

  // Same curve shifted right by s (f(x1 - s)), re-expanded in the same basis.
  GratingProfile shifted(double s) const;

  bool is_flat() const;
};

}  // namespace grating
