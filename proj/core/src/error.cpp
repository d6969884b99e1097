#include "semcomm/error.hpp"

namespace semcomm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::placement_failed: return "PLACEMENT_FAILED";
    case ErrorCode::connectivity_failed: return "CONNECTIVITY_FAILED";
    case ErrorCode::bad_action_count: return "BAD_ACTION_COUNT";
    case ErrorCode::precondition: return "PRECONDITION";
    case ErrorCode::domain: return "DOMAIN";
    case ErrorCode::out_of_range: return "OUT_OF_RANGE";
    case ErrorCode::shape_mismatch: return "SHAPE_MISMATCH";
    case ErrorCode::dim_mismatch: return "DIM_MISMATCH";
    case ErrorCode::insufficient_samples: return "INSUFFICIENT_SAMPLES";
    case ErrorCode::empty_history: return "EMPTY_HISTORY";
    case ErrorCode::parse_error: return "PARSE_ERROR";
    case ErrorCode::validation_error: return "VALIDATION_ERROR";
    case ErrorCode::checkpoint_mismatch: return "CHECKPOINT_MISMATCH";
    case ErrorCode::io_error: return "IO_ERROR";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace semcomm
