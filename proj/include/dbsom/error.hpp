#pragma once

#include <stdexcept>
#include <string>

namespace dbsom {

// Every failure the library can signal. CLI maps these to exit codes:
// data/shape problems -> 2, everything else -> 3.
enum class ErrorCode {
  NonMonotoneBreaks,
  WeightsNotNormalized,
  EmptySample,
  ZeroDispersion,
  DimensionMismatch,
  SchemeMismatch,
  IndexOutOfRange,
  ToroidalParity,
  NonPositiveRadius,
  TooManyNeurons,
  NonFiniteInput,
  ZeroKernelMass,
  SingleCluster,
  LengthMismatch,
  ParseError,
  InvariantViolation,
  RaggedSeries,
  UnknownObjectId,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code),
        message_(what) {}

  ErrorCode code() const { return code_; }

  // The message without the code prefix, for rethrowing with added context.
  const std::string& message() const { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace dbsom
