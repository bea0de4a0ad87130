#include "pstitch/error.hpp"

namespace pstitch {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kOutOfBounds: return "out-of-bounds";
    case ErrorCode::kNoIntersection: return "no-intersection";
    case ErrorCode::kDegenerateMapping: return "degenerate-mapping";
    case ErrorCode::kInsufficientFeatures: return "insufficient-features";
    case ErrorCode::kEstimationFailure: return "estimation-failure";
    case ErrorCode::kIngestionError: return "ingestion-error";
    case ErrorCode::kSolverFailure: return "solver-failure";
    case ErrorCode::kUndefinedMetric: return "undefined-metric";
    case ErrorCode::kIoError: return "io-error";
  }
  return "unknown";
}

}  // namespace pstitch
