#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crflat {

/// Every failure the library can report. The numeric value doubles as the
/// process exit code of the command line tool, so values are stable.
enum class ErrorCode : int {
  Ok = 0,
  ParseError = 10,
  SchemaError = 11,
  DegreeTooHigh = 12,
  ConfigError = 13,
  IoError = 14,
  NotComplexPoint = 20,
  JetUnavailable = 21,
  NotFlat = 22,
  NotNormalForm = 23,
  NotElliptic = 24,
  DegenerateDefiningFunctions = 30,
  NotCRPoint = 31,
  MinimalityDetected = 32,
  ZeroLeviForm = 33,
  IndeterminateRank = 34,
  AtComplexPoint = 40,
  StepFailure = 41,
  NonClosure = 42,
  TransversalMiss = 43,
  PoleClassificationFailure = 44,
  HypothesisViolation = 45,
  BaseTooClose = 50,
  LineSliceEmpty = 51,
  NegativeSheetCount = 52,
  InconsistentSheetCount = 53,
  NonGraphOrbit = 54,
  PoorFit = 55,
  MeshTooCoarse = 56,
  NoOverlap = 57,
  AllLevelsExceptional = 60,
  PoleCapFailure = 61,
  BoundaryCollision = 62,
  EmptyInput = 63,
  GlueInfeasible = 64,
  VerificationFailed = 70,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DegreeTooHigh: return "DegreeTooHigh";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NotComplexPoint: return "NotComplexPoint";
    case ErrorCode::JetUnavailable: return "JetUnavailable";
    case ErrorCode::NotFlat: return "NotFlat";
    case ErrorCode::NotNormalForm: return "NotNormalForm";
    case ErrorCode::NotElliptic: return "NotElliptic";
    case ErrorCode::DegenerateDefiningFunctions: return "DegenerateDefiningFunctions";
    case ErrorCode::NotCRPoint: return "NotCRPoint";
    case ErrorCode::MinimalityDetected: return "MinimalityDetected";
    case ErrorCode::ZeroLeviForm: return "ZeroLeviForm";
    case ErrorCode::IndeterminateRank: return "IndeterminateRank";
    case ErrorCode::AtComplexPoint: return "AtComplexPoint";
    case ErrorCode::StepFailure: return "StepFailure";
    case ErrorCode::NonClosure: return "NonClosure";
    case ErrorCode::TransversalMiss: return "TransversalMiss";
    case ErrorCode::PoleClassificationFailure: return "PoleClassificationFailure";
    case ErrorCode::HypothesisViolation: return "HypothesisViolation";
    case ErrorCode::BaseTooClose: return "BaseTooClose";
    case ErrorCode::LineSliceEmpty: return "LineSliceEmpty";
    case ErrorCode::NegativeSheetCount: return "NegativeSheetCount";
    case ErrorCode::InconsistentSheetCount: return "InconsistentSheetCount";
    case ErrorCode::NonGraphOrbit: return "NonGraphOrbit";
    case ErrorCode::PoorFit: return "PoorFit";
    case ErrorCode::MeshTooCoarse: return "MeshTooCoarse";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::AllLevelsExceptional: return "AllLevelsExceptional";
    case ErrorCode::PoleCapFailure: return "PoleCapFailure";
    case ErrorCode::BoundaryCollision: return "BoundaryCollision";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::GlueInfeasible: return "GlueInfeasible";
    case ErrorCode::VerificationFailed: return "VerificationFailed";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace crflat
