#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace levelscore {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kOutOfRange,
  kParameter,
  kNumeric,
  kUnreachableTarget,
  kEmptyInput,
  kDegenerateInput,
  kHypothesisNotMet,
  kConfig,
  kIo,
  kTrainingDiverged,
  kClient,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Domain error carrying a machine-readable code. The CLI maps these to exit
/// status 1 and a JSON object on stderr.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace levelscore
