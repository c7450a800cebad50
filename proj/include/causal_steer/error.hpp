#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace causal_steer {

enum class ErrorCode {
  // causal-model
  unknown_variable,
  invalid_graph,
  // extraction / templates
  empty_prompt,
  ambiguous_attribute,
  empty_interventions,
  empty_input,
  unspecified_in_prompt,
  // service ports
  precondition,
  service_unreachable,
  service_rejected,
  malformed_response,
  frame_io,
  empty_completion,
  // steering
  index_out_of_range,
  // evaluation
  dim_mismatch,
  zero_vector,
  empty_description,
  missing_artifacts,
  // dataset
  parse_error,
  missing_frame,
  duplicate_id,
  empty_manifest,
  insufficient_frames,
  unreadable_image,
  // cli / server
  config_error,
  port_in_use,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

  /// Transient failures that a transport may retry.
  [[nodiscard]] bool retryable() const noexcept {
    return code_ == ErrorCode::service_unreachable;
  }

 private:
  ErrorCode code_;
};

}  // namespace causal_steer
