#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rarerate {

enum class ErrorCode {
  NonPositiveWeight,
  NonFiniteWeight,
  DomainError,
  ConvergenceError,
  NextWeightUnresolved,
  GreedySamplingVariance,
  UnknownCategory,
  NoSimulatedRecords,
  ZeroDenominator,
  Unidentifiable,
  InsufficientData,
  InvalidRecord,
  InvalidArgument,
  ConfigError,
  MalformedInput,
  NoRows,
  IoError,
};

/// True for errors caused by bad user input, false for numerical failures.
constexpr bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConvergenceError:
    case ErrorCode::ZeroDenominator:
    case ErrorCode::GreedySamplingVariance:
    case ErrorCode::Unidentifiable:
      return false;
    default:
      return true;
  }
}

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rarerate
