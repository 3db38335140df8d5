#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace imputebench {

/// Machine-readable failure codes raised by the library.
enum class Errc {
  DimensionMismatch,
  ZeroVariance,
  TooFewObserved,
  EmptyResult,
  AlreadyMissing,
  PercentOutOfRange,
  SingularDesign,
  TooFewRows,
  NoConvergence,
  DegenerateSigma,
  SingularObservedBlock,
  EmptyDonorPool,
  ZeroWithinVariance,
  AllMissingColumn,
  EmptyInput,
  ShapeMismatch,
  MissingCell,
  NotPsd,
  MissingOutputs,
  InvalidOption,
  ParseError,
  NonFiniteResult,
  Io,
};

/// Broad failure category; the CLI maps these onto exit codes 1/2/3.
enum class ErrorCategory { Usage = 1, Data = 2, Numeric = 3 };

constexpr std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::TooFewObserved: return "TooFewObserved";
    case Errc::EmptyResult: return "EmptyResult";
    case Errc::AlreadyMissing: return "AlreadyMissing";
    case Errc::PercentOutOfRange: return "PercentOutOfRange";
    case Errc::SingularDesign: return "SingularDesign";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::DegenerateSigma: return "DegenerateSigma";
    case Errc::SingularObservedBlock: return "SingularObservedBlock";
    case Errc::EmptyDonorPool: return "EmptyDonorPool";
    case Errc::ZeroWithinVariance: return "ZeroWithinVariance";
    case Errc::AllMissingColumn: return "AllMissingColumn";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::MissingCell: return "MissingCell";
    case Errc::NotPsd: return "NotPsd";
    case Errc::MissingOutputs: return "MissingOutputs";
    case Errc::InvalidOption: return "InvalidOption";
    case Errc::ParseError: return "ParseError";
    case Errc::NonFiniteResult: return "NonFiniteResult";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

constexpr ErrorCategory errc_category(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidOption:
      return ErrorCategory::Usage;
    case Errc::SingularDesign:
    case Errc::NoConvergence:
    case Errc::DegenerateSigma:
    case Errc::SingularObservedBlock:
    case Errc::ZeroWithinVariance:
    case Errc::NotPsd:
    case Errc::NonFiniteResult:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return errc_category(code_); }

 private:
  Errc code_;
};

}  // namespace imputebench
