#include "grating/inverse.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "grating/parallel.hpp"

namespace grating {

namespace {

// dof vector layout: [offset, cos_1..cos_D, sin_1..sin_D]
Eigen::VectorXd pack(const GratingProfile& p, int degrees) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(1 + 2 * degrees);
  c(0) = p.offset;
  for (int j = 1; j <= degrees; ++j) {
    if (j <= static_cast<int>(p.cos_coeffs.size())) c(j) = p.cos_coeffs[j - 1];
    if (j <= static_cast<int>(p.sin_coeffs.size()))
      c(degrees + j) = p.sin_coeffs[j - 1];
  }
  return c;
}

GratingProfile unpack(const Eigen::VectorXd& c, double period, int degrees) {
  std::vector<double> cosc(degrees), sinc(degrees);
  for (int j = 1; j <= degrees; ++j) {
    cosc[j - 1] = c(j);
    sinc[j - 1] = c(degrees + j);
  }
  return GratingProfile::make(period, c(0), std::move(cosc), std::move(sinc));
}

// Stacked real residual vector: per angle, per point, (Re, Im) of
// (u_model - u_data); Tikhonov rows sqrt(reg) * c appended.
Eigen::VectorXd residual_vector(const GratingProfile& profile,
                                const DataSet& data,
                                const InversionConfig& config,
                                const Eigen::VectorXd& c) {
  const std::size_t npts = data.segment.x1.size();
  Eigen::VectorXd r(2 * data.angles.size() * npts + c.size());
  std::vector<std::vector<cplx>> model(data.angles.size());

  parallel_for(data.angles.size(), config.workers, [&](std::size_t a) {
    PlaneWave wave = PlaneWave::make(data.k, data.angles[a]);
    ForwardSolution sol = solve_dirichlet(profile, wave, config.forward);
    model[a].resize(npts);
    for (std::size_t p = 0; p < npts; ++p) {
      double x1 = data.segment.x1[p];
      model[a][p] = wave.field(x1, data.segment.height) +
                    sol.expansion.value(x1, data.segment.height);
    }
  });

  std::size_t row = 0;
  for (std::size_t a = 0; a < data.angles.size(); ++a) {
    for (std::size_t p = 0; p < npts; ++p) {
      cplx diff = model[a][p] - data.values[a][p];
      r(row++) = diff.real();
      r(row++) = diff.imag();
    }
  }
  double sreg = std::sqrt(config.regularization);
  for (Eigen::Index i = 0; i < c.size(); ++i) r(row++) = sreg * c(i);
  return r;
}

double fd_step(double value, double rel) {
  return rel * std::max(1.0, std::abs(value));
}

}  // namespace

DataSet DataSet::make(double k, std::vector<double> angles,
                      SegmentSamples segment,
                      std::vector<std::vector<cplx>> values) {
  require(k > 0.0, ErrorCode::InvalidArgument, "wavenumber must be positive");
  require(!angles.empty(), ErrorCode::InvalidArgument, "no angles supplied");
  for (std::size_t i = 0; i < angles.size(); ++i)
    for (std::size_t j = i + 1; j < angles.size(); ++j)
      require(angles[i] != angles[j], ErrorCode::InvalidArgument,
              "incident angles must be pairwise distinct");
  require(values.size() == angles.size(), ErrorCode::InvalidArgument,
          "one value row per angle required");
  for (const auto& row : values)
    require(row.size() == segment.x1.size(), ErrorCode::InvalidArgument,
            "value row length must match the segment");
  DataSet d;
  d.k = k;
  d.angles = std::move(angles);
  d.segment = std::move(segment);
  d.values = std::move(values);
  return d;
}

DataSet DataSet::synthesize(const GratingProfile& profile, double k,
                            const std::vector<double>& angles,
                            const SegmentSamples& segment,
                            const CollocationConfig& forward, int workers) {
  require(segment.height > profile.max_height, ErrorCode::InvalidArgument,
          "measurement segment must lie above the profile");
  std::vector<std::vector<cplx>> values(angles.size());
  parallel_for(angles.size(), workers, [&](std::size_t a) {
    PlaneWave wave = PlaneWave::make(k, angles[a]);
    ForwardSolution sol = solve_dirichlet(profile, wave, forward);
    values[a].resize(segment.x1.size());
    for (std::size_t p = 0; p < segment.x1.size(); ++p) {
      double x1 = segment.x1[p];
      values[a][p] = wave.field(x1, segment.height) +
                     sol.expansion.value(x1, segment.height);
    }
  });
  return make(k, angles, segment, std::move(values));
}

void InversionConfig::validate(const GratingProfile& reference) const {
  require(degrees >= 0, ErrorCode::InvalidArgument, "degrees must be >= 0");
  require(degrees <= forward.mode_count, ErrorCode::InvalidArgument,
          "profile dof must not exceed the forward solver mode count");
  require(regularization >= 0.0, ErrorCode::InvalidArgument,
          "regularization weight must be >= 0");
  require(max_iterations >= 0, ErrorCode::InvalidArgument,
          "max_iterations must be >= 0");
  require(reference.period > 0.0, ErrorCode::InvalidArgument,
          "profile period must be positive");
}

MisfitValue misfit(const GratingProfile& profile, const DataSet& data,
                   const InversionConfig& config) {
  config.validate(profile);
  Eigen::VectorXd c = pack(profile, config.degrees);

  auto value_at = [&](const Eigen::VectorXd& coeffs) {
    GratingProfile p = unpack(coeffs, profile.period, config.degrees);
    return residual_vector(p, data, config, coeffs).squaredNorm();
  };

  MisfitValue out;
  out.value = value_at(c);
  out.gradient.resize(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    double h = fd_step(c(i), config.relative_step);
    Eigen::VectorXd up = c, dn = c;
    up(i) += h;
    dn(i) -= h;
    out.gradient[i] = (value_at(up) - value_at(dn)) / (2.0 * h);
  }
  return out;
}

ReconstructionResult reconstruct(const DataSet& data,
                                 const GratingProfile& init,
                                 const InversionConfig& config) {
  config.validate(init);
  const double period = init.period;
  Eigen::VectorXd c = pack(init, config.degrees);

  auto residual_at = [&](const Eigen::VectorXd& coeffs) {
    GratingProfile p = unpack(coeffs, period, config.degrees);
    return residual_vector(p, data, config, coeffs);
  };

  ReconstructionResult result;
  Eigen::VectorXd r = residual_at(c);
  double value = r.squaredNorm();
  result.misfit_history.push_back(value);

  double damping = 1e-4;
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    if (value < config.misfit_tolerance) {
      result.converged = true;
      break;
    }

    // Finite-difference Jacobian of the residual vector.
    Eigen::MatrixXd J(r.size(), c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      double h = fd_step(c(i), config.relative_step);
      Eigen::VectorXd up = c, dn = c;
      up(i) += h;
      dn(i) -= h;
      J.col(i) = (residual_at(up) - residual_at(dn)) / (2.0 * h);
    }
    Eigen::MatrixXd JtJ = J.transpose() * J;
    Eigen::VectorXd Jtr = J.transpose() * r;

    bool accepted = false;
    for (int attempt = 0; attempt < config.divergence_window; ++attempt) {
      Eigen::MatrixXd H = JtJ;
      H.diagonal().array() += damping;
      Eigen::VectorXd step = H.ldlt().solve(-Jtr);
      Eigen::VectorXd trial = c + step;
      Eigen::VectorXd rt = residual_at(trial);
      double trial_value = rt.squaredNorm();

      IterationRecord rec;
      rec.misfit = trial_value;
      rec.step_norm = step.norm();
      rec.damping = damping;
      rec.accepted = trial_value < value;
      result.iterations.push_back(rec);

      if (rec.accepted) {
        c = trial;
        r = rt;
        value = trial_value;
        result.misfit_history.push_back(value);
        ++result.accepted_steps;
        damping = std::max(damping * 0.25, 1e-12);
        accepted = true;
        break;
      }
      damping *= 10.0;
    }
    if (!accepted) {
      if (result.accepted_steps == 0 && !(value < config.misfit_tolerance)) {
        std::ostringstream msg;
        msg << "misfit failed to decrease over " << config.divergence_window
            << " damping retries (misfit " << value << ")";
        fail(ErrorCode::Diverged, msg.str());
      }
      break;  // stationary: no damping choice improves further
    }
  }
  if (value < config.misfit_tolerance) result.converged = true;

  result.profile = unpack(c, period, config.degrees);
  return result;
}

double linear_independence_gram(const GratingProfile& profile, double k,
                                const std::vector<double>& angles,
                                const SegmentSamples& segment,
                                const CollocationConfig& forward) {
  require(!angles.empty(), ErrorCode::InvalidArgument, "no angles supplied");
  require(segment.x1.size() >= angles.size(), ErrorCode::InvalidArgument,
          "need at least as many sample points as angles");

  const std::size_t M = angles.size();
  const std::size_t P = segment.x1.size();
  Eigen::MatrixXcd U(M, P);
  for (std::size_t a = 0; a < M; ++a) {
    PlaneWave wave = PlaneWave::make(k, angles[a]);
    ForwardSolution sol = solve_dirichlet(profile, wave, forward);
    for (std::size_t p = 0; p < P; ++p) {
      double x1 = segment.x1[p];
      U(a, p) = wave.field(x1, segment.height) +
                sol.expansion.value(x1, segment.height);
    }
    double norm = U.row(a).norm();
    require(norm > 0.0, ErrorCode::InvalidArgument,
            "total field vanished on the whole segment");
    U.row(a) /= norm;
  }
  Eigen::MatrixXcd gram = U * U.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram,
                                                     Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace grating
