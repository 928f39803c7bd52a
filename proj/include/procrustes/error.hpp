#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace procrustes {

enum class ErrorCode {
  NotSymmetric,
  NotPositiveSemidefinite,
  NoConvergence,
  SingularMatrix,
  RankDeficient,
  DimensionMismatch,
  InvalidAlpha,
  DimensionTooLarge,
  NonPositiveShiftedEigenvalue,
  IndexOutOfRange,
  InfeasibleBudget,
  NoAscent,
  CholeskyFailure,
  InvalidSketchSize,
  InvalidParams,
  InvalidScale,
  DegenerateCloud,
  InvalidBandwidth,
  InsufficientPairs,
  DivergedLoss,
  InvalidWeight,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::NonPositiveShiftedEigenvalue: return "NonPositiveShiftedEigenvalue";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InfeasibleBudget: return "InfeasibleBudget";
    case ErrorCode::NoAscent: return "NoAscent";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::InvalidSketchSize: return "InvalidSketchSize";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::InvalidScale: return "InvalidScale";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::InvalidBandwidth: return "InvalidBandwidth";
    case ErrorCode::InsufficientPairs: return "InsufficientPairs";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::InvalidWeight: return "InvalidWeight";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace procrustes
