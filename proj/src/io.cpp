#include "grating/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace grating::io {

namespace {

constexpr const char* kTableHeader =
    "n,re_A,im_A,alpha_n,re_beta_n,im_beta_n,propagating,anomalous";

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  return out;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    require(pos == s.size(), ErrorCode::InvalidArgument,
            std::string("trailing characters in ") + what + ": " + s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidArgument,
         std::string("cannot parse ") + what + ": '" + s + "'");
  }
}

// Reads lines, collecting `# key = value` comments until the first
// non-comment line, which is returned through `first`.
std::map<std::string, std::string> read_comments(std::istream& is,
                                                 std::string& first) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      std::string body = trim(t.substr(1));
      std::size_t eq = body.find('=');
      if (eq != std::string::npos)
        kv[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      continue;
    }
    first = t;
    return kv;
  }
  first.clear();
  return kv;
}

void write_comments(std::ostream& os, const Comments& extra) {
  for (const auto& [key, value] : extra) os << "# " << key << " = " << value << "\n";
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_coefficient_table(std::ostream& os, const RayleighExpansion& e,
                             const Comments& extra) {
  Comments meta = {
      {"k", format_double(e.grid.k)},
      {"alpha0", format_double(e.grid.alpha0)},
      {"period", format_double(e.grid.period)},
      {"window", std::to_string(e.grid.window)},
      {"reference_height", format_double(e.reference_height)},
      {"includes_incident", e.includes_incident ? "1" : "0"},
  };
  meta.insert(meta.end(), extra.begin(), extra.end());
  write_comments(os, meta);
  os << kTableHeader << "\n";

  auto row = [&](const std::string& tag, cplx a, double alpha, cplx beta,
                 bool prop, bool anom) {
    os << tag << ',' << format_double(a.real()) << ',' << format_double(a.imag())
       << ',' << format_double(alpha) << ',' << format_double(beta.real())
       << ',' << format_double(beta.imag()) << ',' << (prop ? 1 : 0) << ','
       << (anom ? 1 : 0) << "\n";
  };

  if (e.includes_incident) {
    double beta0 = e.grid.beta_n(0).real();
    row("inc", cplx(1.0, 0.0), e.grid.alpha0, cplx(-beta0, 0.0), true, false);
  }
  for (const auto& [n, a] : e.coeffs)
    row(std::to_string(n), a, e.grid.alpha_n(n), e.grid.beta_n(n),
        e.grid.propagating(n), e.grid.anomalous(n));
}

RayleighExpansion read_coefficient_table(std::istream& is) {
  std::string first;
  auto meta = read_comments(is, first);
  require(first == kTableHeader, ErrorCode::InvalidArgument,
          "coefficient table header missing or malformed");
  for (const char* key : {"k", "alpha0", "period", "window",
                          "reference_height", "includes_incident"})
    require(meta.count(key) > 0, ErrorCode::InvalidArgument,
            std::string("coefficient table misses metadata key ") + key);

  double k = parse_double(meta["k"], "k");
  double alpha0 = parse_double(meta["alpha0"], "alpha0");
  double period = parse_double(meta["period"], "period");
  int window = static_cast<int>(parse_double(meta["window"], "window"));
  double href = parse_double(meta["reference_height"], "reference_height");
  bool incident = meta["includes_incident"] == "1";

  ModeGrid grid;
  grid.period = period;
  grid.alpha0 = alpha0;
  grid.k = k;
  grid.window = window;

  std::map<int, cplx> coeffs;
  bool saw_incident = false;
  std::string line;
  while (std::getline(is, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = split_csv(t);
    require(fields.size() == 8, ErrorCode::InvalidArgument,
            "coefficient row must have 8 fields: " + t);
    cplx a(parse_double(fields[1], "re_A"), parse_double(fields[2], "im_A"));
    if (fields[0] == "inc") {
      saw_incident = true;
      continue;
    }
    int n = static_cast<int>(parse_double(fields[0], "n"));
    coeffs[n] = a;
  }
  require(saw_incident == incident, ErrorCode::InvalidArgument,
          "incident row does not match the includes_incident flag");
  return RayleighExpansion::make(grid, std::move(coeffs), incident, href);
}

void write_profile(std::ostream& os, const GratingProfile& p,
                   const Comments& extra) {
  write_comments(os, extra);
  os << "period = " << format_double(p.period) << "\n";
  os << "offset = " << format_double(p.offset) << "\n";
  for (std::size_t j = 0; j < p.cos_coeffs.size(); ++j)
    os << "cos[" << (j + 1) << "] = " << format_double(p.cos_coeffs[j]) << "\n";
  for (std::size_t j = 0; j < p.sin_coeffs.size(); ++j)
    os << "sin[" << (j + 1) << "] = " << format_double(p.sin_coeffs[j]) << "\n";
}

GratingProfile read_profile(std::istream& is) {
  double period = 0.0, offset = 0.0;
  bool saw_period = false;
  std::map<int, double> cosc, sinc;
  std::string line;
  while (std::getline(is, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    require(eq != std::string::npos, ErrorCode::InvalidArgument,
            "profile line is not `key = value`: " + t);
    std::string key = trim(t.substr(0, eq));
    double value = parse_double(trim(t.substr(eq + 1)), key.c_str());
    if (key == "period") {
      period = value;
      saw_period = true;
    } else if (key == "offset") {
      offset = value;
    } else if (key.rfind("cos[", 0) == 0 && key.back() == ']') {
      int j = static_cast<int>(
          parse_double(key.substr(4, key.size() - 5), "cos index"));
      require(j >= 1, ErrorCode::InvalidArgument, "cos index must be >= 1");
      cosc[j] = value;
    } else if (key.rfind("sin[", 0) == 0 && key.back() == ']') {
      int j = static_cast<int>(
          parse_double(key.substr(4, key.size() - 5), "sin index"));
      require(j >= 1, ErrorCode::InvalidArgument, "sin index must be >= 1");
      sinc[j] = value;
    } else {
      fail(ErrorCode::InvalidArgument, "unknown profile key: " + key);
    }
  }
  require(saw_period, ErrorCode::InvalidArgument, "profile misses `period`");
  int degree = 0;
  if (!cosc.empty()) degree = std::max(degree, cosc.rbegin()->first);
  if (!sinc.empty()) degree = std::max(degree, sinc.rbegin()->first);
  std::vector<double> cv(degree, 0.0), sv(degree, 0.0);
  for (const auto& [j, v] : cosc) cv[j - 1] = v;
  for (const auto& [j, v] : sinc) sv[j - 1] = v;
  return GratingProfile::make(period, offset, std::move(cv), std::move(sv));
}

void write_intensity_grid(std::ostream& os, const PhaselessSamples& s,
                          bool dense_block, const Comments& extra) {
  write_comments(os, extra);
  if (dense_block) {
    os << s.x1.size() << ' ' << s.x2.size() << ' '
       << format_double(s.x1.front()) << ' ' << format_double(s.x1.back())
       << ' ' << format_double(s.x2.front()) << ' '
       << format_double(s.x2.back()) << "\n";
    for (std::size_t i = 0; i < s.x1.size(); ++i) {
      for (std::size_t j = 0; j < s.x2.size(); ++j) {
        if (j) os << ' ';
        os << format_double(s.intensity(i, j));
      }
      os << "\n";
    }
  } else {
    os << "x1,x2,intensity\n";
    for (std::size_t i = 0; i < s.x1.size(); ++i)
      for (std::size_t j = 0; j < s.x2.size(); ++j)
        os << format_double(s.x1[i]) << ',' << format_double(s.x2[j]) << ','
           << format_double(s.intensity(i, j)) << "\n";
  }
}

PhaselessSamples read_intensity_grid(std::istream& is, const PlaneWave& wave,
                                     std::optional<double> period,
                                     double profile_max) {
  std::string first;
  read_comments(is, first);
  require(!first.empty(), ErrorCode::InvalidArgument, "empty intensity file");

  if (first == "x1,x2,intensity" || first.find(',') != std::string::npos) {
    std::map<double, std::map<double, double>> table;  // x1 -> x2 -> value
    auto ingest = [&](const std::string& t) {
      auto fields = split_csv(t);
      require(fields.size() == 3, ErrorCode::InvalidArgument,
              "intensity row must be x1,x2,intensity: " + t);
      double a = parse_double(fields[0], "x1");
      double b = parse_double(fields[1], "x2");
      table[a][b] = parse_double(fields[2], "intensity");
    };
    if (first != "x1,x2,intensity") ingest(first);
    std::string line;
    while (std::getline(is, line)) {
      std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      ingest(t);
    }
    require(!table.empty(), ErrorCode::InvalidArgument, "no intensity rows");
    std::vector<double> x1, x2;
    for (const auto& [a, row] : table) x1.push_back(a);
    for (const auto& [b, v] : table.begin()->second) x2.push_back(b);
    Eigen::MatrixXd values(x1.size(), x2.size());
    std::size_t i = 0;
    for (const auto& [a, row] : table) {
      require(row.size() == x2.size(), ErrorCode::InvalidArgument,
              "intensity rows do not form a rectangular grid");
      std::size_t j = 0;
      for (const auto& [b, v] : row) {
        require(b == x2[j], ErrorCode::InvalidArgument,
                "intensity rows do not share one x2 grid");
        values(i, j) = v;
        ++j;
      }
      ++i;
    }
    return PhaselessSamples::make(std::move(x1), std::move(x2),
                                  std::move(values), wave, period, profile_max);
  }

  // dense block: nx1 nx2 x1min x1max x2min x2max
  std::stringstream head(first);
  std::size_t n1 = 0, n2 = 0;
  double a0, a1, b0, b1;
  head >> n1 >> n2 >> a0 >> a1 >> b0 >> b1;
  require(!head.fail() && n1 >= 2 && n2 >= 2, ErrorCode::InvalidArgument,
          "malformed dense-grid header");
  std::vector<double> x1(n1), x2(n2);
  for (std::size_t i = 0; i < n1; ++i)
    x1[i] = a0 + (a1 - a0) * i / (n1 - 1);
  for (std::size_t j = 0; j < n2; ++j)
    x2[j] = b0 + (b1 - b0) * j / (n2 - 1);
  Eigen::MatrixXd values(n1, n2);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j) {
      double v;
      is >> v;
      require(!is.fail(), ErrorCode::InvalidArgument,
              "dense grid ended prematurely");
      values(i, j) = v;
    }
  return PhaselessSamples::make(std::move(x1), std::move(x2), std::move(values),
                                wave, period, profile_max);
}

void write_line_samples(std::ostream& os, const std::vector<double>& x1,
                        const std::vector<cplx>& u, const Comments& extra) {
  require(x1.size() == u.size(), ErrorCode::InvalidArgument,
          "sample/value count mismatch");
  write_comments(os, extra);
  os << "x1,re_u,im_u\n";
  for (std::size_t i = 0; i < x1.size(); ++i)
    os << format_double(x1[i]) << ',' << format_double(u[i].real()) << ','
       << format_double(u[i].imag()) << "\n";
}

void read_line_samples(std::istream& is, std::vector<double>& x1,
                       std::vector<cplx>& u) {
  x1.clear();
  u.clear();
  std::string first;
  read_comments(is, first);
  require(first == "x1,re_u,im_u", ErrorCode::InvalidArgument,
          "line-sample header missing");
  std::string line;
  while (std::getline(is, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = split_csv(t);
    require(fields.size() == 3, ErrorCode::InvalidArgument,
            "line-sample row must be x1,re_u,im_u: " + t);
    x1.push_back(parse_double(fields[0], "x1"));
    u.emplace_back(parse_double(fields[1], "re_u"),
                   parse_double(fields[2], "im_u"));
  }
}

void write_dispersion_csv(std::ostream& os, const DispersionCurve& curve,
                          const Comments& extra) {
  write_comments(os, extra);
  os << "alpha";
  for (int j = 0; j < curve.bands.cols(); ++j) os << ",K_" << (j + 1);
  os << "\n";
  for (std::size_t i = 0; i < curve.alpha_grid.size(); ++i) {
    os << format_double(curve.alpha_grid[i]);
    for (int j = 0; j < curve.bands.cols(); ++j)
      os << ',' << format_double(curve.bands(static_cast<Eigen::Index>(i), j));
    os << "\n";
  }
}

DispersionCurve read_dispersion_csv(std::istream& is) {
  std::string first;
  read_comments(is, first);
  auto header = split_csv(first);
  require(header.size() >= 2 && header[0] == "alpha" && header[1] == "K_1",
          ErrorCode::InvalidArgument, "dispersion header missing");
  int bands = static_cast<int>(header.size()) - 1;
  std::vector<double> alpha;
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = split_csv(t);
    require(static_cast<int>(fields.size()) == bands + 1,
            ErrorCode::InvalidArgument, "dispersion row width mismatch");
    alpha.push_back(parse_double(fields[0], "alpha"));
    std::vector<double> row(bands);
    for (int j = 0; j < bands; ++j)
      row[j] = parse_double(fields[j + 1], "band value");
    rows.push_back(std::move(row));
  }
  DispersionCurve curve;
  curve.alpha_grid = std::move(alpha);
  curve.bands.resize(static_cast<Eigen::Index>(rows.size()), bands);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < bands; ++j)
      curve.bands(static_cast<Eigen::Index>(i), j) = rows[i][j];
  return curve;
}

nlohmann::json coefficient_rows_json(const RayleighExpansion& e) {
  nlohmann::json rows = nlohmann::json::array();
  if (e.includes_incident) {
    double beta0 = e.grid.beta_n(0).real();
    rows.push_back({{"n", "inc"},
                    {"re_A", 1.0},
                    {"im_A", 0.0},
                    {"alpha_n", e.grid.alpha0},
                    {"re_beta_n", -beta0},
                    {"im_beta_n", 0.0},
                    {"propagating", 1},
                    {"anomalous", 0}});
  }
  for (const auto& [n, a] : e.coeffs) {
    rows.push_back({{"n", n},
                    {"re_A", a.real()},
                    {"im_A", a.imag()},
                    {"alpha_n", e.grid.alpha_n(n)},
                    {"re_beta_n", e.grid.beta_n(n).real()},
                    {"im_beta_n", e.grid.beta_n(n).imag()},
                    {"propagating", e.grid.propagating(n) ? 1 : 0},
                    {"anomalous", e.grid.anomalous(n) ? 1 : 0}});
  }
  return rows;
}

nlohmann::json solution_json(const ForwardSolution& sol,
                             const PlaneWave& wave) {
  return {{"params",
           {{"k", wave.k},
            {"theta", wave.theta},
            {"period", sol.expansion.grid.period},
            {"window", sol.expansion.grid.window}}},
          {"table", coefficient_rows_json(sol.expansion)},
          {"diagnostics",
           {{"residual", sol.boundary_residual},
            {"defect", sol.energy_defect},
            {"condition", sol.condition}}}};
}

nlohmann::json mu_spectrum_json(const MuSpectrum& spec) {
  nlohmann::json complex_list = nlohmann::json::array();
  for (const cplx& mu : spec.complex_mu)
    complex_list.push_back({{"re", mu.real()}, {"im", mu.imag()}});
  return {{"k", spec.k},
          {"real_mu", spec.real_mu},
          {"multiplicity", spec.multiplicity},
          {"residuals", spec.residuals},
          {"complex_mu", complex_list}};
}

nlohmann::json retrieval_json(const RetrievalResult& result,
                              const FrequencyCatalog& catalog) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& [n, a] : result.coefficients)
    coeffs.push_back({{"n", n},
                      {"re_A", a.real()},
                      {"im_A", a.imag()},
                      {"singleton", catalog.reference_singleton(n)}});
  return {{"params",
           {{"k", catalog.k},
            {"theta", catalog.theta},
            {"period", catalog.period},
            {"window", catalog.window}}},
          {"coefficients", coeffs},
          {"rank_one_defect", result.rank_one_defect},
          {"fit_residual", result.fit_residual},
          {"flags",
           {{"excluded_angle", result.excluded_angle},
            {"unique", result.unique},
            {"near_collision", catalog.near_collision},
            {"collided_reference", result.collided_reference}}},
          {"dictionary_classes", result.dictionary_classes}};
}

nlohmann::json flat_band_json(const FlatBandReport& report, double tol) {
  return {{"tol", tol},
          {"flat_bands", report.flat_bands},
          {"variations", report.variations}};
}

nlohmann::json profile_json(const GratingProfile& p) {
  return {{"period", p.period},
          {"offset", p.offset},
          {"cos", p.cos_coeffs},
          {"sin", p.sin_coeffs},
          {"min_height", p.min_height},
          {"max_height", p.max_height}};
}

nlohmann::json reconstruction_json(const ReconstructionResult& result,
                                   const GratingProfile& init,
                                   double wall_seconds,
                                   const std::vector<AngleOutcome>& final_diag) {
  nlohmann::json iters = nlohmann::json::array();
  for (const IterationRecord& it : result.iterations)
    iters.push_back({{"misfit", it.misfit},
                     {"step_norm", it.step_norm},
                     {"damping", it.damping},
                     {"accepted", it.accepted}});
  nlohmann::json diag = nlohmann::json::array();
  for (const AngleOutcome& a : final_diag) {
    nlohmann::json entry = {{"theta", a.theta}};
    if (a.solution) {
      entry["residual"] = a.solution->boundary_residual;
      entry["defect"] = a.solution->energy_defect;
      entry["condition"] = a.solution->condition;
    } else {
      entry["error"] = a.error;
    }
    diag.push_back(entry);
  }
  return {{"initial", profile_json(init)},
          {"final", profile_json(result.profile)},
          {"misfit_history", result.misfit_history},
          {"iterations", iters},
          {"accepted_steps", result.accepted_steps},
          {"converged", result.converged},
          {"wall_seconds", wall_seconds},
          {"per_angle", diag}};
}

nlohmann::json period_estimate_json(const PeriodEstimate& est) {
  return {{"candidates", est.candidates},
          {"degenerate", est.degenerate},
          {"frequencies", est.frequencies}};
}

}  // namespace grating::io
