#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pstitch {

enum class ErrorCode {
  kInvalidArgument,
  kOutOfBounds,
  kNoIntersection,
  kDegenerateMapping,
  kInsufficientFeatures,
  kEstimationFailure,
  kIngestionError,
  kSolverFailure,
  kUndefinedMetric,
  kIoError,
};

/// Kebab-case name used in machine-readable error output.
std::string_view to_string(ErrorCode code);

class StitchError : public std::runtime_error {
 public:
  StitchError(ErrorCode code, const std::string& message, std::string stage = {})
      : std::runtime_error(message), code_(code), stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

  StitchError with_stage(std::string stage) const {
    return StitchError(code_, what(), std::move(stage));
  }

 private:
  ErrorCode code_;
  std::string stage_;
};

}  // namespace pstitch
