#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qmm {

enum class ErrorCode {
  ZeroOffDiagonal,
  NegativeDistance,
  NonpositiveMass,
  TooFewPoints,
  NonFinite,
  ShapeMismatch,
  InvalidSpec,
  MetrizationMismatch,
  Precondition,
  NonconvexRegime,
  CriticalOrSupercritical,
  BadRadii,
  CriticalSmoothness,
  HalfMassPreconditionFailed,
  RegimeMismatch,
  EmptyBall,
  ZeroSeminorm,
  BadExponents,
  PreconditionFailed,
  UnboundedConstant,
  NotPerfect,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::ZeroOffDiagonal: return "ZeroOffDiagonal";
    case ErrorCode::NegativeDistance: return "NegativeDistance";
    case ErrorCode::NonpositiveMass: return "NonpositiveMass";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::MetrizationMismatch: return "MetrizationMismatch";
    case ErrorCode::Precondition: return "Precondition";
    case ErrorCode::NonconvexRegime: return "NonconvexRegime";
    case ErrorCode::CriticalOrSupercritical: return "CriticalOrSupercritical";
    case ErrorCode::BadRadii: return "BadRadii";
    case ErrorCode::CriticalSmoothness: return "CriticalSmoothness";
    case ErrorCode::HalfMassPreconditionFailed: return "HalfMassPreconditionFailed";
    case ErrorCode::RegimeMismatch: return "RegimeMismatch";
    case ErrorCode::EmptyBall: return "EmptyBall";
    case ErrorCode::ZeroSeminorm: return "ZeroSeminorm";
    case ErrorCode::BadExponents: return "BadExponents";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::UnboundedConstant: return "UnboundedConstant";
    case ErrorCode::NotPerfect: return "NotPerfect";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by validation; carries every violated axiom, the first one is the headline.
class ValidationError : public Error {
 public:
  struct Violation {
    ErrorCode code;
    std::string message;
  };

  explicit ValidationError(std::vector<Violation> v)
      : Error(v.front().code, v.front().message), violations_(std::move(v)) {}
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

}  // namespace qmm
