#pragma once

// Least-squares profile reconstruction from multi-angle near-field data.
// Uniqueness of the minimizer comes from the multi-angle data itself; the
// solver is a damped Gauss-Newton loop over the profile's Fourier
// coefficients with Tikhonov regularization, gradients and Jacobians by
// central finite differences through the forward solver.

#include <vector>

#include "grating/forward.hpp"
#include "grating/profile.hpp"
#include "grating/rayleigh.hpp"

namespace grating {

struct SegmentSamples {
  double height = 0.0;      // measurement line x2 = height
  std::vector<double> x1;   // sample abscissae
};

struct DataSet {
  double k = 0.0;
  std::vector<double> angles;  // pairwise distinct
  SegmentSamples segment;
  std::vector<std::vector<cplx>> values;  // total field u, [angle][point]

  static DataSet make(double k, std::vector<double> angles,
                      SegmentSamples segment,
                      std::vector<std::vector<cplx>> values);

  // Forward-solver generated data (the synthetic experiment driver).
  static DataSet synthesize(const GratingProfile& profile, double k,
                            const std::vector<double>& angles,
                            const SegmentSamples& segment,
                            const CollocationConfig& forward, int workers = 0);
};

struct InversionConfig {
  int degrees = 2;               // dof: offset + cos/sin up to this degree
  double regularization = 0.0;   // Tikhonov weight on the coefficient vector
  int max_iterations = 40;
  double misfit_tolerance = 1e-12;
  double relative_step = 1e-6;   // finite-difference step, relative
  int divergence_window = 6;     // rejected damping retries before giving up
  CollocationConfig forward;
  int workers = 0;

  void validate(const GratingProfile& reference) const;
};

struct MisfitValue {
  double value = 0.0;
  std::vector<double> gradient;  // d misfit / d [offset, cos_j, sin_j]
};

// sum over angles and points of |u_model - u_data|^2 plus the
// regularization term; gradient by central differences (relative step
// config.relative_step).  Solver errors propagate per angle.
MisfitValue misfit(const GratingProfile& profile, const DataSet& data,
                   const InversionConfig& config);

struct IterationRecord {
  double misfit = 0.0;
  double step_norm = 0.0;
  double damping = 0.0;
  bool accepted = false;
};

struct ReconstructionResult {
  GratingProfile profile;
  std::vector<double> misfit_history;  // initial value plus accepted steps
  std::vector<IterationRecord> iterations;
  int accepted_steps = 0;
  bool converged = false;
};

// Damped Gauss-Newton descent on the misfit, deterministic for identical
// inputs.  Throws Diverged when no damping choice improves the misfit and
// the best value still exceeds the initial one.
ReconstructionResult reconstruct(const DataSet& data,
                                 const GratingProfile& init,
                                 const InversionConfig& config);

// sigma_min of the normalized Gram matrix of total-field samples, M angles
// by sample_count points on the segment; a numerical witness of the linear
// independence of total fields at distinct angles.
double linear_independence_gram(const GratingProfile& profile, double k,
                                const std::vector<double>& angles,
                                const SegmentSamples& segment,
                                const CollocationConfig& forward);

}  // namespace grating
