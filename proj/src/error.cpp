#include "levelscore/error.hpp"

namespace levelscore {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kParameter: return "parameter";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kUnreachableTarget: return "unreachable_target";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kDegenerateInput: return "degenerate_input";
    case ErrorCode::kHypothesisNotMet: return "hypothesis_not_met";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kTrainingDiverged: return "training_diverged";
    case ErrorCode::kClient: return "client";
  }
  return "unknown";
}

}  // namespace levelscore
