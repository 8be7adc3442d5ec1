#include "dbsom/error.hpp"

namespace dbsom {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonMonotoneBreaks: return "NonMonotoneBreaks";
    case ErrorCode::WeightsNotNormalized: return "WeightsNotNormalized";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::ZeroDispersion: return "ZeroDispersion";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SchemeMismatch: return "SchemeMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ToroidalParity: return "ToroidalParity";
    case ErrorCode::NonPositiveRadius: return "NonPositiveRadius";
    case ErrorCode::TooManyNeurons: return "TooManyNeurons";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::ZeroKernelMass: return "ZeroKernelMass";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::RaggedSeries: return "RaggedSeries";
    case ErrorCode::UnknownObjectId: return "UnknownObjectId";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace dbsom
