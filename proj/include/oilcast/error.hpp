#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oilcast {

enum class ErrorCode {
  DimensionMismatch,
  NotPositiveDefinite,
  InvalidRange,
  InvalidArgument,
  NonFiniteObjective,
  // dataset
  MissingColumn,
  NonMonotonicDates,
  GapInDates,
  UnparseableCell,
  MissingValue,
  SplitOutOfRange,
  ConstantColumn,
  UnknownColumn,
  SchemaError,
  // models
  EmptyInput,
  DivergedToNonFinite,
  SingularSystem,
  SeriesTooShort,
  InsufficientAnchor,
  ConstantSeries,
  NumericalBreakdown,
  OptimizerFailed,
  // evaluation
  ConstantActuals,
  DegenerateDof,
  ZeroInSampleR2,
  DegenerateLossDifferential,
  LengthMismatch,
  TooShort,
  // harness
  AllCellsFailed,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonMonotonicDates: return "NonMonotonicDates";
    case ErrorCode::GapInDates: return "GapInDates";
    case ErrorCode::UnparseableCell: return "UnparseableCell";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::SplitOutOfRange: return "SplitOutOfRange";
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DivergedToNonFinite: return "DivergedToNonFinite";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::InsufficientAnchor: return "InsufficientAnchor";
    case ErrorCode::ConstantSeries: return "ConstantSeries";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::OptimizerFailed: return "OptimizerFailed";
    case ErrorCode::ConstantActuals: return "ConstantActuals";
    case ErrorCode::DegenerateDof: return "DegenerateDof";
    case ErrorCode::ZeroInSampleR2: return "ZeroInSampleR2";
    case ErrorCode::DegenerateLossDifferential: return "DegenerateLossDifferential";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::AllCellsFailed: return "AllCellsFailed";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Domain error carrying a machine-checkable code. Every failure reported by
/// the library is one of these; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace oilcast
