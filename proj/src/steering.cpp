#include "causal_steer/steering.hpp"

#include <algorithm>
#include <chrono>

#include <spdlog/spdlog.h>

#include "causal_steer/error.hpp"
#include "causal_steer/text.hpp"

namespace causal_steer {

using nlohmann::json;

FrameSelector FrameSelector::parse(std::string_view s) {
  if (s == "first") return {Kind::first, 0};
  if (s == "middle") return {Kind::middle, 0};
  if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return {Kind::index, static_cast<std::size_t>(std::stoull(std::string(s)))};
  }
  throw Error(ErrorCode::config_error,
              "frame selector must be first, middle or a frame index, got '" + std::string(s) + "'");
}

std::string FrameSelector::to_string() const {
  switch (kind) {
    case Kind::first: return "first";
    case Kind::middle: return "middle";
    case Kind::index: return std::to_string(k);
  }
  return "middle";
}

const Frame& select_frame(const VideoClip& video, const FrameSelector& selector) {
  if (video.empty()) throw Error(ErrorCode::precondition, "cannot select a frame from an empty clip");
  std::size_t i = 0;
  switch (selector.kind) {
    case FrameSelector::Kind::first: i = 0; break;
    case FrameSelector::Kind::middle: i = video.size() / 2; break;
    case FrameSelector::Kind::index: i = selector.k; break;
  }
  if (i >= video.size()) {
    throw Error(ErrorCode::index_out_of_range, "frame " + std::to_string(i) + " requested from a " +
                                                   std::to_string(video.size()) + "-frame clip");
  }
  return video.frames[i];
}

json SteeringConfig::to_json() const {
  return {{"max_iters", max_iters},
          {"frame_selector", selector.to_string()},
          {"termination_phrases", termination_phrases},
          {"causal_decoupling", causal_decoupling},
          {"render_final", render_final},
          {"editor_params", editor_params}};
}

Clock steady_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

TextualGradient compute_gradient(std::string_view prompt, const LossFeedback& loss, LlmPort& llm,
                                 const PromptTemplates& templates, CallLog* log) {
  if (loss.approved) throw Error(ErrorCode::precondition, "no gradient for an approved loss");
  auto value = complete(llm, render_gradient_elicitation(prompt, loss.value, templates), log);
  if (text::trim(value).empty()) throw Error(ErrorCode::empty_completion, "the optimizer returned an empty gradient");
  return {std::move(value)};
}

std::string tgd_step(std::string_view prompt, const TextualGradient& gradient, LlmPort& llm,
                     const PromptTemplates& templates, CallLog* log) {
  auto out = text::trim(complete(llm, render_gradient_prompt(prompt, gradient.value, templates), log));
  // Strip matching outer quotes, possibly nested ("'...'").
  while (out.size() >= 2) {
    const char a = out.front(), b = out.back();
    if ((a == '"' && b == '"') || (a == '\'' && b == '\'') || (a == '`' && b == '`')) {
      out = text::trim(std::string_view(out).substr(1, out.size() - 2));
    } else {
      break;
    }
  }
  if (out.empty()) throw Error(ErrorCode::empty_completion, "the TGD update produced an empty prompt");
  return out;
}

json to_json(const CallRecord& call) {
  return {{"port", call.port},
          {"op", call.op},
          {"request_sha256", call.request_sha256},
          {"response_sha256", call.response_sha256}};
}

namespace {

json calls_json(const CallLog& calls) {
  json out = json::array();
  for (const auto& c : calls) out.push_back(to_json(c));
  return out;
}

}  // namespace

json to_json(const IterationRecord& r) {
  return {{"iter", r.iter},
          {"prompt_in", r.prompt_in},
          {"video_out_id", r.video_out_id},
          {"frame_index", r.frame_index},
          {"frame_sha256", r.frame_sha256},
          {"loss", {{"value", r.loss.value}, {"approved", r.loss.approved}}},
          {"gradient", r.gradient ? json(r.gradient->value) : json(nullptr)},
          {"prompt_out", r.prompt_out ? json(*r.prompt_out) : json(nullptr)},
          {"wall_time_ms", r.wall_time_ms},
          {"calls", calls_json(r.calls)}};
}

SteeringResult steer(const VideoClip& video, std::string_view initial_prompt, const PromptPair& pair,
                     const CausalGraph& graph, const SteeringConfig& config, const Ports& ports,
                     const RunContext& ctx, const PromptTemplates& templates) {
  if (config.max_iters < 1) throw Error(ErrorCode::config_error, "max_iters must be at least 1");
  if (ctx.run_dir.empty()) throw Error(ErrorCode::config_error, "steering needs a run directory");
  const auto interventions = extract_interventions(pair, graph);
  if (interventions.empty()) {
    throw Error(ErrorCode::empty_interventions, "factual and counterfactual prompts describe the same state");
  }
  const auto instruction = render_evaluation_instruction(pair.counterfactual, interventions, graph,
                                                         config.causal_decoupling, templates);

  json items = json::array();
  for (const auto& i : interventions.items()) items.push_back({{"variable", i.variable}, {"value", i.value}});
  json trace = {{"run_id", ctx.run_id},
                {"dataset_item", ctx.dataset_item},
                {"label", ctx.label},
                {"factual_prompt", pair.factual},
                {"initial_prompt", std::string(initial_prompt)},
                {"interventions",
                 {{"items", items},
                  {"rendered", instruction.target_interventions},
                  {"decoupled", instruction.decoupled}}},
                {"config", config.to_json()},
                {"records", json::array()}};

  SteeringResult result;
  result.state.current = std::string(initial_prompt);
  auto save = [&] { write_file_atomic(ctx.run_dir / "trace.json", trace.dump(2) + "\n"); };

  IterationRecord rec;
  std::string where;
  try {
    for (int k = 1; k <= config.max_iters; ++k) {
      rec = IterationRecord{};
      rec.iter = k;
      rec.prompt_in = result.state.current;
      where = "iteration " + std::to_string(k);
      const auto t0 = ctx.clock();
      spdlog::info("[{}] iter {}: editing with \"{}\"", ctx.run_id, k, rec.prompt_in);

      auto clip = edit_video(*ports.editor, video, rec.prompt_in, ctx.run_dir / ("iter_" + std::to_string(k)),
                             config.editor_params, &rec.calls);
      const auto& frame = select_frame(clip, config.selector);
      rec.video_out_id = clip.id;
      rec.frame_index = frame.index;
      rec.frame_sha256 = frame.sha256;
      rec.loss = criticize(*ports.vlm, frame, instruction, rec.prompt_in, config.termination_phrases, &rec.calls);
      result.video = std::move(clip);
      trace["final_video"] = {{"id", result.video.id},
                              {"dir", "iter_" + std::to_string(k)},
                              {"frame_index", rec.frame_index}};

      if (rec.loss.approved) {
        spdlog::info("[{}] iter {}: evaluator approved the frame", ctx.run_id, k);
      } else {
        rec.gradient = compute_gradient(rec.prompt_in, rec.loss, *ports.llm, templates, &rec.calls);
        rec.prompt_out = tgd_step(rec.prompt_in, *rec.gradient, *ports.llm, templates, &rec.calls);
        spdlog::info("[{}] iter {}: prompt \"{}\" -> \"{}\"", ctx.run_id, k, rec.prompt_in, *rec.prompt_out);
        result.state.current = *rec.prompt_out;
      }
      rec.wall_time_ms = ctx.clock() - t0;
      trace["records"].push_back(to_json(rec));
      const bool approved = rec.loss.approved;
      result.state.history.push_back(std::move(rec));
      rec = IterationRecord{};
      if (approved) break;
    }
    result.status = result.state.history.back().loss.approved ? "approved" : "exhausted";

    if (result.status == "exhausted" && config.render_final) {
      where = "final render";
      CallLog calls;
      auto clip = edit_video(*ports.editor, video, result.state.current, ctx.run_dir / "final",
                             config.editor_params, &calls);
      trace["final_render"] = {{"prompt", result.state.current},
                               {"video_id", clip.id},
                               {"dir", "final"},
                               {"calls", calls_json(calls)}};
      result.final_render = std::move(clip);
    }
  } catch (const Error& e) {
    trace["status"] = "failed";
    trace["failure"] = {{"code", std::string(to_string(e.code()))},
                        {"message", e.what()},
                        {"where", where},
                        {"calls", calls_json(rec.calls)}};
    save();
    spdlog::error("[{}] run failed during {}: {}", ctx.run_id, where, e.what());
    throw;
  }
  trace["status"] = result.status;
  save();
  result.trace = std::move(trace);
  return result;
}

}  // namespace causal_steer
