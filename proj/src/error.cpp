#include "ild/error.hpp"

namespace ild {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotLowerTriangular: return "NotLowerTriangular";
    case ErrorCode::NonPositiveDiagonal: return "NonPositiveDiagonal";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DomainOutOfRange: return "DomainOutOfRange";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::TriangularityBroken: return "TriangularityBroken";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace ild
