#pragma once

// File formats.
//
// Coefficient table (CSV): optional leading `# key = value` comment lines
// carrying the producing parameters, then the required header
//   n,re_A,im_A,alpha_n,re_beta_n,im_beta_n,propagating,anomalous
// one row per mode; the incident row uses the literal index token `inc`.
//
// Profile description: `key = value` lines with keys period, offset, cos[j],
// sin[j]; `#` starts a comment.
//
// Intensity grids: either CSV rows `x1,x2,intensity` covering a full
// rectangular grid, or a dense block with header line
//   nx1 nx2 x1min x1max x2min x2max
// followed by nx1 lines of nx2 values (x1 varies per line, x2 per column)
// on uniformly spaced grids.
//
// Line samples (CSV): rows `x1,re_u,im_u`.
//
// JSON reports use the shapes assembled below.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "grating/forward.hpp"
#include "grating/inverse.hpp"
#include "grating/phase_retrieval.hpp"
#include "grating/profile.hpp"
#include "grating/rayleigh.hpp"
#include "grating/waveguide.hpp"

namespace grating::io {

using Comments = std::vector<std::pair<std::string, std::string>>;

std::string format_double(double v);  // shortest exact round-trip text

void write_coefficient_table(std::ostream& os, const RayleighExpansion& e,
                             const Comments& extra = {});
RayleighExpansion read_coefficient_table(std::istream& is);

void write_profile(std::ostream& os, const GratingProfile& p,
                   const Comments& extra = {});
GratingProfile read_profile(std::istream& is);

void write_intensity_grid(std::ostream& os, const PhaselessSamples& s,
                          bool dense_block, const Comments& extra = {});
// wave/period/profile_max are carried by the caller, not the grid file
PhaselessSamples read_intensity_grid(std::istream& is, const PlaneWave& wave,
                                     std::optional<double> period,
                                     double profile_max);

void write_line_samples(std::ostream& os, const std::vector<double>& x1,
                        const std::vector<cplx>& u, const Comments& extra = {});
void read_line_samples(std::istream& is, std::vector<double>& x1,
                       std::vector<cplx>& u);

void write_dispersion_csv(std::ostream& os, const DispersionCurve& curve,
                          const Comments& extra = {});
DispersionCurve read_dispersion_csv(std::istream& is);

nlohmann::json coefficient_rows_json(const RayleighExpansion& e);
nlohmann::json solution_json(const ForwardSolution& sol, const PlaneWave& wave);
nlohmann::json mu_spectrum_json(const MuSpectrum& spec);
nlohmann::json retrieval_json(const RetrievalResult& result,
                              const FrequencyCatalog& catalog);
nlohmann::json flat_band_json(const FlatBandReport& report, double tol);
nlohmann::json profile_json(const GratingProfile& p);
nlohmann::json reconstruction_json(const ReconstructionResult& result,
                                   const GratingProfile& init,
                                   double wall_seconds,
                                   const std::vector<AngleOutcome>& final_diag);
nlohmann::json period_estimate_json(const PeriodEstimate& est);

}  // namespace grating::io
