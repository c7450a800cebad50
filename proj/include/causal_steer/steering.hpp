#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causal_steer/causal_graph.hpp"
#include "causal_steer/interventions.hpp"
#include "causal_steer/media.hpp"
#include "causal_steer/ports.hpp"
#include "causal_steer/templates.hpp"

namespace causal_steer {

struct FrameSelector {
  enum class Kind { first, middle, index };
  Kind kind = Kind::middle;
  std::size_t k = 0;

  /// "first", "middle" or a non-negative integer. Throws Error(config_error).
  static FrameSelector parse(std::string_view s);
  [[nodiscard]] std::string to_string() const;
};

/// Throws Error(precondition) on an empty clip, Error(index_out_of_range).
const Frame& select_frame(const VideoClip& video, const FrameSelector& selector);

struct SteeringConfig {
  int max_iters = 2;
  FrameSelector selector;
  std::vector<std::string> termination_phrases = default_termination_phrases();
  /// Append the decoupling sentence when an intervened variable has parents.
  bool causal_decoupling = true;
  /// On exhaustion, edit once more with the last updated prompt.
  bool render_final = false;
  nlohmann::json editor_params = nlohmann::json::object();

  [[nodiscard]] nlohmann::json to_json() const;
};

struct IterationRecord {
  int iter = 0;
  std::string prompt_in;
  std::string video_out_id;
  std::size_t frame_index = 0;
  std::string frame_sha256;
  LossFeedback loss;
  std::optional<TextualGradient> gradient;
  std::optional<std::string> prompt_out;
  std::int64_t wall_time_ms = 0;
  CallLog calls;
};

struct PromptState {
  std::string current;
  std::vector<IterationRecord> history;
};

/// Milliseconds from an arbitrary origin. Injected so traces can be golden.
using Clock = std::function<std::int64_t()>;
Clock steady_clock_ms();

struct RunContext {
  std::string run_id;
  std::string dataset_item;
  std::string label;
  /// iter_<k>/ frame directories and trace.json are written here.
  std::filesystem::path run_dir;
  Clock clock = steady_clock_ms();
};

struct SteeringResult {
  VideoClip video;
  PromptState state;
  /// "approved" or "exhausted".
  std::string status;
  std::optional<VideoClip> final_render;
  nlohmann::json trace;
};

/// Textual gradient of the loss w.r.t. the prompt. Throws Error(precondition)
/// if the loss already approves the frame.
TextualGradient compute_gradient(std::string_view prompt, const LossFeedback& loss, LlmPort& llm,
                                 const PromptTemplates& templates = PromptTemplates::defaults(),
                                 CallLog* log = nullptr);

/// One TGD update. Surrounding quotes and whitespace are stripped; an empty
/// result throws Error(empty_completion).
std::string tgd_step(std::string_view prompt, const TextualGradient& gradient, LlmPort& llm,
                     const PromptTemplates& templates = PromptTemplates::defaults(),
                     CallLog* log = nullptr);

/// The counterfactual generation loop. Every iteration edits the factual
/// `video` with the current prompt, criticizes one frame, and either stops or
/// updates the prompt. trace.json is written on success and on failure; on
/// failure the error is rethrown after the trace (status "failed") is saved.
SteeringResult steer(const VideoClip& video, std::string_view initial_prompt, const PromptPair& pair,
                     const CausalGraph& graph, const SteeringConfig& config, const Ports& ports,
                     const RunContext& context,
                     const PromptTemplates& templates = PromptTemplates::defaults());

nlohmann::json to_json(const IterationRecord& record);
nlohmann::json to_json(const CallRecord& call);

}  // namespace causal_steer
