#pragma once

#include <stdexcept>
#include <string>

namespace entrolp {

/// Failure categories surfaced by the library. Input errors describe bad
/// data handed to an operation; numerical errors signal a breakdown of an
/// iterative procedure that should not happen on well-posed inputs.
enum class ErrorCode {
  // input / validation
  NonPositivePrior,
  PriorNotNormalized,
  TooFewActions,
  NonFiniteCost,
  ShapeMismatch,
  InvalidPolicy,
  InvalidPattern,
  InvalidArgument,
  TooLarge,
  NotReducible,
  InvalidLambda,
  NotAttainable,
  EmptySupport,
  // numerical / iterative
  SupportViolation,
  BoundaryPoint,
  NotInterior,
  NumericalUnderflow,
  DegenerateCosts,
  BracketFailure,
  MaxOuterExceeded,
  MaxInnerExceeded,
  RejectionExhausted,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositivePrior: return "NonPositivePrior";
    case ErrorCode::PriorNotNormalized: return "PriorNotNormalized";
    case ErrorCode::TooFewActions: return "TooFewActions";
    case ErrorCode::NonFiniteCost: return "NonFiniteCost";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidPolicy: return "InvalidPolicy";
    case ErrorCode::InvalidPattern: return "InvalidPattern";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NotReducible: return "NotReducible";
    case ErrorCode::InvalidLambda: return "InvalidLambda";
    case ErrorCode::NotAttainable: return "NotAttainable";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::BoundaryPoint: return "BoundaryPoint";
    case ErrorCode::NotInterior: return "NotInterior";
    case ErrorCode::NumericalUnderflow: return "NumericalUnderflow";
    case ErrorCode::DegenerateCosts: return "DegenerateCosts";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::MaxOuterExceeded: return "MaxOuterExceeded";
    case ErrorCode::MaxInnerExceeded: return "MaxInnerExceeded";
    case ErrorCode::RejectionExhausted: return "RejectionExhausted";
  }
  return "UnknownError";
}

/// True when the code describes malformed input rather than a numerical
/// breakdown. The CLI maps input errors to exit code 2 and the rest to 3.
inline bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositivePrior:
    case ErrorCode::PriorNotNormalized:
    case ErrorCode::TooFewActions:
    case ErrorCode::NonFiniteCost:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::InvalidPolicy:
    case ErrorCode::InvalidPattern:
    case ErrorCode::InvalidArgument:
    case ErrorCode::TooLarge:
    case ErrorCode::NotReducible:
    case ErrorCode::InvalidLambda:
    case ErrorCode::NotAttainable:
    case ErrorCode::EmptySupport:
      return true;
    default:
      return false;
  }
}

class SolverError : public std::runtime_error {
 public:
  SolverError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace entrolp
