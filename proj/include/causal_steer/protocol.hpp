#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace causal_steer::protocol {

// Wire schemas for the four service endpoints. Images travel as base64 in
// JSON; in memory they are raw encoded bytes. Every parser rejects unknown or
// missing fields with Error(parse_error).

inline constexpr const char* kEditPath = "/v1/edit";
inline constexpr const char* kVlmPath = "/v1/vlm";
inline constexpr const char* kLlmPath = "/v1/llm";
inline constexpr const char* kEmbedPath = "/v1/embed";
inline constexpr const char* kHealthPath = "/healthz";

struct EditRequest {
  std::string clip_id;
  std::vector<std::string> frames;
  std::string prompt;
  nlohmann::json params = nlohmann::json::object();

  bool operator==(const EditRequest&) const = default;
};

struct EditResponse {
  std::vector<std::string> frames;

  bool operator==(const EditResponse&) const = default;
};

struct VlmPart {
  enum class Kind { text, image };
  Kind kind = Kind::text;
  /// Text, or raw image bytes.
  std::string data;

  static VlmPart text(std::string s) { return {Kind::text, std::move(s)}; }
  static VlmPart image(std::string bytes) { return {Kind::image, std::move(bytes)}; }

  bool operator==(const VlmPart&) const = default;
};

struct VlmRequest {
  std::vector<VlmPart> parts;

  bool operator==(const VlmRequest&) const = default;
};

struct LlmRequest {
  std::string prompt;

  bool operator==(const LlmRequest&) const = default;
};

/// Response body of both /v1/vlm and /v1/llm.
struct TextResponse {
  std::string text;

  bool operator==(const TextResponse&) const = default;
};

struct EmbedRequest {
  std::vector<std::string> texts;

  bool operator==(const EmbedRequest&) const = default;
};

struct EmbedResponse {
  std::vector<std::vector<double>> vectors;
  int dim = 0;

  bool operator==(const EmbedResponse&) const = default;
};

nlohmann::json to_json(const EditRequest& r);
nlohmann::json to_json(const EditResponse& r);
nlohmann::json to_json(const VlmRequest& r);
nlohmann::json to_json(const LlmRequest& r);
nlohmann::json to_json(const TextResponse& r);
nlohmann::json to_json(const EmbedRequest& r);
nlohmann::json to_json(const EmbedResponse& r);

EditRequest parse_edit_request(const nlohmann::json& j);
EditResponse parse_edit_response(const nlohmann::json& j);
VlmRequest parse_vlm_request(const nlohmann::json& j);
LlmRequest parse_llm_request(const nlohmann::json& j);
TextResponse parse_text_response(const nlohmann::json& j);
EmbedRequest parse_embed_request(const nlohmann::json& j);
EmbedResponse parse_embed_response(const nlohmann::json& j);

/// Audit digests: SHA-256 over a canonical JSON form in which images are
/// replaced by their own SHA-256.
std::string digest(const EditRequest& r);
std::string digest(const EditResponse& r);
std::string digest(const VlmRequest& r);
std::string digest(const LlmRequest& r);
std::string digest(const TextResponse& r);
std::string digest(const EmbedRequest& r);
std::string digest(const EmbedResponse& r);

}  // namespace causal_steer::protocol
