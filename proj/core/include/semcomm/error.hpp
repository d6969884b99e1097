#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semcomm {

enum class ErrorCode {
  placement_failed,
  connectivity_failed,
  bad_action_count,
  precondition,
  domain,
  out_of_range,
  shape_mismatch,
  dim_mismatch,
  insufficient_samples,
  empty_history,
  parse_error,
  validation_error,
  checkpoint_mismatch,
  io_error,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-checkable error code. The message is
/// prefixed with the upper-case code name, e.g. "PARSE_ERROR: ...".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace semcomm
