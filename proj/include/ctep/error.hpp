#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctep {

enum class ErrorCode {
  InvalidParameters,
  NonpositiveDensity,
  NonpositiveS,
  NonpositiveMass,
  RegimeMismatch,
  SingularityStall,
  CurveRangeExceeded,
  StepFailure,
  Inconclusive,
  TailTooHeavy,
  InvalidField,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameters: return "InvalidParameters";
    case ErrorCode::NonpositiveDensity: return "NonpositiveDensity";
    case ErrorCode::NonpositiveS: return "NonpositiveS";
    case ErrorCode::NonpositiveMass: return "NonpositiveMass";
    case ErrorCode::RegimeMismatch: return "RegimeMismatch";
    case ErrorCode::SingularityStall: return "SingularityStall";
    case ErrorCode::CurveRangeExceeded: return "CurveRangeExceeded";
    case ErrorCode::StepFailure: return "StepFailure";
    case ErrorCode::Inconclusive: return "Inconclusive";
    case ErrorCode::TailTooHeavy: return "TailTooHeavy";
    case ErrorCode::InvalidField: return "InvalidField";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace ctep
