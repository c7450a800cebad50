#include "causal_steer/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string_view>

#include "causal_steer/error.hpp"
#include "causal_steer/media.hpp"

namespace causal_steer::protocol {

using nlohmann::json;

namespace {

[[noreturn]] void fail(std::string_view schema, const std::string& what) {
  throw Error(ErrorCode::parse_error, std::string(schema) + ": " + what);
}

void expect_fields(const json& j, std::string_view schema,
                   std::initializer_list<std::string_view> required,
                   std::initializer_list<std::string_view> optional = {}) {
  if (!j.is_object()) fail(schema, "body must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                 std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) fail(schema, "unknown field '" + key + "'");
  }
  for (auto key : required) {
    if (!j.contains(key)) fail(schema, "missing field '" + std::string(key) + "'");
  }
}

std::string get_string(const json& j, const char* key, std::string_view schema) {
  const auto& v = j.at(key);
  if (!v.is_string()) fail(schema, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<std::string> get_string_array(const json& j, const char* key, std::string_view schema) {
  const auto& v = j.at(key);
  if (!v.is_array()) fail(schema, std::string("field '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) fail(schema, std::string("field '") + key + "' must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<std::string> decode_frames(const std::vector<std::string>& encoded, std::string_view schema) {
  std::vector<std::string> out;
  out.reserve(encoded.size());
  for (const auto& e : encoded) {
    try {
      out.push_back(base64_decode(e));
    } catch (const Error& err) {
      fail(schema, err.what());
    }
  }
  return out;
}

json encode_frames(const std::vector<std::string>& frames) {
  json out = json::array();
  for (const auto& f : frames) out.push_back(base64_encode(f));
  return out;
}

json frame_digests(const std::vector<std::string>& frames) {
  json out = json::array();
  for (const auto& f : frames) out.push_back(sha256_hex(f));
  return out;
}

std::string digest_of(const json& canonical) { return sha256_hex(canonical.dump()); }

}  // namespace

json to_json(const EditRequest& r) {
  return {{"clip_id", r.clip_id}, {"frames", encode_frames(r.frames)},
          {"prompt", r.prompt}, {"params", r.params}};
}

json to_json(const EditResponse& r) { return {{"frames", encode_frames(r.frames)}}; }

json to_json(const VlmRequest& r) {
  json parts = json::array();
  for (const auto& p : r.parts) {
    if (p.kind == VlmPart::Kind::text) {
      parts.push_back({{"type", "text"}, {"data", p.data}});
    } else {
      parts.push_back({{"type", "image"}, {"data", base64_encode(p.data)}});
    }
  }
  return {{"parts", parts}};
}

json to_json(const LlmRequest& r) { return {{"prompt", r.prompt}}; }
json to_json(const TextResponse& r) { return {{"text", r.text}}; }
json to_json(const EmbedRequest& r) { return {{"texts", r.texts}}; }
json to_json(const EmbedResponse& r) { return {{"vectors", r.vectors}, {"dim", r.dim}}; }

EditRequest parse_edit_request(const json& j) {
  constexpr std::string_view schema = "edit request";
  expect_fields(j, schema, {"clip_id", "frames", "prompt"}, {"params"});
  EditRequest r;
  r.clip_id = get_string(j, "clip_id", schema);
  r.frames = decode_frames(get_string_array(j, "frames", schema), schema);
  r.prompt = get_string(j, "prompt", schema);
  if (j.contains("params")) {
    if (!j.at("params").is_object()) fail(schema, "field 'params' must be an object");
    r.params = j.at("params");
  }
  return r;
}

EditResponse parse_edit_response(const json& j) {
  constexpr std::string_view schema = "edit response";
  expect_fields(j, schema, {"frames"});
  return {decode_frames(get_string_array(j, "frames", schema), schema)};
}

VlmRequest parse_vlm_request(const json& j) {
  constexpr std::string_view schema = "vlm request";
  expect_fields(j, schema, {"parts"});
  if (!j.at("parts").is_array()) fail(schema, "field 'parts' must be an array");
  VlmRequest r;
  for (const auto& part : j.at("parts")) {
    expect_fields(part, "vlm request part", {"type", "data"});
    auto type = get_string(part, "type", schema);
    auto data = get_string(part, "data", schema);
    if (type == "text") {
      r.parts.push_back(VlmPart::text(std::move(data)));
    } else if (type == "image") {
      r.parts.push_back(VlmPart::image(decode_frames({data}, schema).front()));
    } else {
      fail(schema, "part type must be 'text' or 'image', got '" + type + "'");
    }
  }
  return r;
}

LlmRequest parse_llm_request(const json& j) {
  constexpr std::string_view schema = "llm request";
  expect_fields(j, schema, {"prompt"});
  return {get_string(j, "prompt", schema)};
}

TextResponse parse_text_response(const json& j) {
  constexpr std::string_view schema = "text response";
  expect_fields(j, schema, {"text"});
  return {get_string(j, "text", schema)};
}

EmbedRequest parse_embed_request(const json& j) {
  constexpr std::string_view schema = "embed request";
  expect_fields(j, schema, {"texts"});
  return {get_string_array(j, "texts", schema)};
}

EmbedResponse parse_embed_response(const json& j) {
  constexpr std::string_view schema = "embed response";
  expect_fields(j, schema, {"vectors", "dim"});
  if (!j.at("dim").is_number_integer()) fail(schema, "field 'dim' must be an integer");
  if (!j.at("vectors").is_array()) fail(schema, "field 'vectors' must be an array");
  EmbedResponse r;
  r.dim = j.at("dim").get<int>();
  if (r.dim <= 0) fail(schema, "dim must be positive");
  for (const auto& v : j.at("vectors")) {
    if (!v.is_array() || v.size() != static_cast<std::size_t>(r.dim)) {
      fail(schema, "every vector must have exactly dim components");
    }
    std::vector<double> components;
    for (const auto& c : v) {
      if (!c.is_number()) fail(schema, "vector components must be numbers");
      double x = c.get<double>();
      if (!std::isfinite(x)) fail(schema, "vector components must be finite");
      components.push_back(x);
    }
    r.vectors.push_back(std::move(components));
  }
  return r;
}

std::string digest(const EditRequest& r) {
  return digest_of({{"clip_id", r.clip_id}, {"frames", frame_digests(r.frames)},
                    {"prompt", r.prompt}, {"params", r.params}});
}

std::string digest(const EditResponse& r) { return digest_of({{"frames", frame_digests(r.frames)}}); }

std::string digest(const VlmRequest& r) {
  json parts = json::array();
  for (const auto& p : r.parts) {
    if (p.kind == VlmPart::Kind::text) {
      parts.push_back({{"type", "text"}, {"data", p.data}});
    } else {
      parts.push_back({{"type", "image"}, {"sha256", sha256_hex(p.data)}});
    }
  }
  return digest_of({{"parts", parts}});
}

std::string digest(const LlmRequest& r) { return digest_of(to_json(r)); }
std::string digest(const TextResponse& r) { return digest_of(to_json(r)); }
std::string digest(const EmbedRequest& r) { return digest_of(to_json(r)); }
std::string digest(const EmbedResponse& r) { return digest_of(to_json(r)); }

}  // namespace causal_steer::protocol
