#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "causal_steer/media.hpp"
#include "causal_steer/protocol.hpp"
#include "causal_steer/templates.hpp"

namespace causal_steer {

// Model ports. Implementations (in-process mocks, HTTP clients) must be safe
// for concurrent use; the steering and evaluation code only sees these
// interfaces.

class VideoEditorPort {
 public:
  virtual ~VideoEditorPort() = default;
  virtual protocol::EditResponse edit(const protocol::EditRequest& request) = 0;
};

class VlmPort {
 public:
  virtual ~VlmPort() = default;
  virtual protocol::TextResponse query(const protocol::VlmRequest& request) = 0;
};

class LlmPort {
 public:
  virtual ~LlmPort() = default;
  virtual protocol::TextResponse complete(const protocol::LlmRequest& request) = 0;
};

class EmbedderPort {
 public:
  virtual ~EmbedderPort() = default;
  virtual protocol::EmbedResponse embed(const protocol::EmbedRequest& request) = 0;
};

struct Ports {
  std::shared_ptr<VideoEditorPort> editor;
  std::shared_ptr<VlmPort> vlm;
  std::shared_ptr<LlmPort> llm;
  std::shared_ptr<EmbedderPort> embedder;
};

/// One external call as it appears in a run trace.
struct CallRecord {
  std::string port;
  std::string op;
  std::string request_sha256;
  std::string response_sha256;

  bool operator==(const CallRecord&) const = default;
};

using CallLog = std::vector<CallRecord>;

/// VLM criticism of a generated frame.
struct LossFeedback {
  std::string value;
  bool approved = false;
};

struct TextualGradient {
  std::string value;
};

struct EmbeddingVector {
  std::vector<double> components;

  [[nodiscard]] std::size_t dim() const noexcept { return components.size(); }
};

/// Result of a VQA query; `choice` is empty when the reply could not be mapped
/// to exactly one choice.
struct AnswerOutcome {
  std::optional<std::size_t> choice;
  std::string raw;
};

const std::vector<std::string>& default_termination_phrases();
/// Case-insensitive substring match against any phrase.
bool contains_termination_phrase(std::string_view text, const std::vector<std::string>& phrases);

/// Sends the clip through the editor and stores the result as out_dir/NNNN.png.
/// The response must keep the frame count and resolution, otherwise
/// Error(malformed_response).
VideoClip edit_video(VideoEditorPort& editor, const VideoClip& video, std::string_view prompt,
                     const std::filesystem::path& out_dir,
                     const nlohmann::json& params = nlohmann::json::object(),
                     CallLog* log = nullptr);

LossFeedback criticize(VlmPort& vlm, const Frame& frame, const EvaluationInstruction& instruction,
                       std::string_view prompt,
                       const std::vector<std::string>& termination_phrases = default_termination_phrases(),
                       CallLog* log = nullptr);

AnswerOutcome answer(VlmPort& vlm, const Frame& frame, const EvalQuestion& question,
                     const PromptTemplates& templates = PromptTemplates::defaults(),
                     CallLog* log = nullptr);

/// Maps a free-text VQA reply to a choice index: a bare or parenthesised
/// letter, or exactly one choice text.
std::optional<std::size_t> parse_choice(std::string_view reply, const EvalQuestion& question);

std::string describe(VlmPort& vlm, const Frame& frame, std::string_view filter_prompt,
                     CallLog* log = nullptr);

std::string complete(LlmPort& llm, std::string_view prompt, CallLog* log = nullptr);

std::vector<EmbeddingVector> embed(EmbedderPort& embedder, const std::vector<std::string>& texts,
                                   CallLog* log = nullptr);

}  // namespace causal_steer
