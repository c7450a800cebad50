#include "causal_steer/error.hpp"

namespace causal_steer {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::unknown_variable: return "unknown-variable";
    case ErrorCode::invalid_graph: return "invalid-graph";
    case ErrorCode::empty_prompt: return "empty-prompt";
    case ErrorCode::ambiguous_attribute: return "ambiguous-attribute";
    case ErrorCode::empty_interventions: return "empty-interventions";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::unspecified_in_prompt: return "unspecified-in-prompt";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::service_unreachable: return "service-unreachable";
    case ErrorCode::service_rejected: return "service-rejected";
    case ErrorCode::malformed_response: return "malformed-response";
    case ErrorCode::frame_io: return "frame-io";
    case ErrorCode::empty_completion: return "empty-completion";
    case ErrorCode::index_out_of_range: return "index-out-of-range";
    case ErrorCode::dim_mismatch: return "dim-mismatch";
    case ErrorCode::zero_vector: return "zero-vector";
    case ErrorCode::empty_description: return "empty-description";
    case ErrorCode::missing_artifacts: return "missing-artifacts";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::missing_frame: return "missing-frame";
    case ErrorCode::duplicate_id: return "duplicate-id";
    case ErrorCode::empty_manifest: return "empty-manifest";
    case ErrorCode::insufficient_frames: return "insufficient-frames";
    case ErrorCode::unreadable_image: return "unreadable-image";
    case ErrorCode::config_error: return "config-error";
    case ErrorCode::port_in_use: return "port-in-use";
  }
  return "unknown";
}

}  // namespace causal_steer
