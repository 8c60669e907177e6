#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace imt {

enum class ErrorCode {
  DomainError,
  OrderingError,
  SeriesDidNotConverge,
  SeriesDiverged,
  MomentTableTooShort,
  OrderTooHigh,
  NegativeVarianceComputed,
  PrecisionExhausted,
  DegenerateLoadLine,
  NoBifurcationInRange,
  SaturationViolated,
  NumericalBlowup,
  InsufficientSamples,
  InsufficientData,
  DegenerateVariance,
  ConfigError,
  ParseError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::OrderingError: return "OrderingError";
    case ErrorCode::SeriesDidNotConverge: return "SeriesDidNotConverge";
    case ErrorCode::SeriesDiverged: return "SeriesDiverged";
    case ErrorCode::MomentTableTooShort: return "MomentTableTooShort";
    case ErrorCode::OrderTooHigh: return "OrderTooHigh";
    case ErrorCode::NegativeVarianceComputed: return "NegativeVarianceComputed";
    case ErrorCode::PrecisionExhausted: return "PrecisionExhausted";
    case ErrorCode::DegenerateLoadLine: return "DegenerateLoadLine";
    case ErrorCode::NoBifurcationInRange: return "NoBifurcationInRange";
    case ErrorCode::SaturationViolated: return "SaturationViolated";
    case ErrorCode::NumericalBlowup: return "NumericalBlowup";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Library-wide exception. Every failure carries a machine-readable code so
/// the harness can map it onto an exit status and sweeps can record it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for the two ways a series can fail to produce a number.
  bool is_series_failure() const noexcept {
    return code_ == ErrorCode::SeriesDidNotConverge || code_ == ErrorCode::SeriesDiverged;
  }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace imt
