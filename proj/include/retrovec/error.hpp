#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace retrovec {

enum class ErrorCode {
  // labelspace
  EmptyAfterNormalization,
  InvalidLanguage,
  InvalidLabel,
  // matrixio
  DimensionMismatch,
  DuplicateLabel,
  ParseError,
  TruncatedFile,
  BadMagic,
  ChecksumOrLengthMismatch,
  IoError,
  // rowmerge
  InvalidRank,
  PlanMismatch,
  // kgraph
  NonPositiveWeight,
  // interpolate
  EmptyOverlap,
  ConvergenceFailure,
  // evalsuite
  InvalidChunk,
  DegenerateInput,
  DegenerateCorrelation,
  // general
  InvalidArgument,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyAfterNormalization: return "EmptyAfterNormalization";
    case ErrorCode::InvalidLanguage: return "InvalidLanguage";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::ChecksumOrLengthMismatch: return "ChecksumOrLengthMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidRank: return "InvalidRank";
    case ErrorCode::PlanMismatch: return "PlanMismatch";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::EmptyOverlap: return "EmptyOverlap";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::InvalidChunk: return "InvalidChunk";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::DegenerateCorrelation: return "DegenerateCorrelation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Process exit status for an error: 1 for configuration problems, 3 for
/// numerical failures, 2 for everything that is wrong with the data.
constexpr int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
      return 1;
    case ErrorCode::ConvergenceFailure:
    case ErrorCode::DegenerateInput:
    case ErrorCode::DegenerateCorrelation:
      return 3;
    default:
      return 2;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// An error raised inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), "stage '" + stage + "': " + cause.what()), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace retrovec
