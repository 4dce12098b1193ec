#pragma once

#include <stdexcept>
#include <string>

namespace grating {

enum class ErrorCode {
  InvalidArgument,
  CurvesIntersect,
  ResolutionTooLow,
  NyquistViolated,
  IllConditioned,
  ResidualExceeded,
  SpecularAnomaly,
  LinearizationSingular,
  BandRangeExceeded,
  RankOneDefectHigh,
  FrequenciesIncommensurate,
  Diverged,
};

const char* error_code_name(ErrorCode code);

// Validation errors (bad inputs, geometry, data) are distinguished from
// numerical failures (conditioning, residuals, divergence); the CLI maps the
// two families to different exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  bool is_validation() const noexcept {
    switch (code_) {
      case ErrorCode::InvalidArgument:
      case ErrorCode::CurvesIntersect:
      case ErrorCode::ResolutionTooLow:
      case ErrorCode::NyquistViolated:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace grating
