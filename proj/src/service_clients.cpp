#include "causal_steer/ports.hpp"

#include <regex>

#include <spdlog/spdlog.h>

#include "causal_steer/error.hpp"
#include "causal_steer/text.hpp"

namespace causal_steer {

const std::vector<std::string>& default_termination_phrases() {
  static const std::vector<std::string> phrases = {"no optimization is needed", "no_optimization"};
  return phrases;
}

bool contains_termination_phrase(std::string_view text, const std::vector<std::string>& phrases) {
  const auto lowered = text::to_lower(text);
  for (const auto& p : phrases) {
    if (lowered.find(text::to_lower(p)) != std::string::npos) return true;
  }
  return false;
}

VideoClip edit_video(VideoEditorPort& editor, const VideoClip& video, std::string_view prompt,
                     const std::filesystem::path& out_dir, const nlohmann::json& params,
                     CallLog* log) {
  if (video.empty()) throw Error(ErrorCode::precondition, "cannot edit an empty clip");
  if (text::trim(prompt).empty()) throw Error(ErrorCode::precondition, "edit prompt is empty");

  protocol::EditRequest request{video.id, read_clip_bytes(video), std::string(prompt), params};
  auto response = editor.edit(request);
  if (response.frames.size() != video.size()) {
    throw Error(ErrorCode::malformed_response,
                "editor returned " + std::to_string(response.frames.size()) + " frames for a " +
                    std::to_string(video.size()) + "-frame clip");
  }
  for (std::size_t i = 0; i < response.frames.size(); ++i) {
    png::Info dims;
    try {
      dims = png::info(response.frames[i]);
    } catch (const Error& e) {
      throw Error(ErrorCode::malformed_response, "editor frame " + std::to_string(i) + ": " + e.what());
    }
    if (dims.width != video.frames[i].width || dims.height != video.frames[i].height) {
      throw Error(ErrorCode::malformed_response,
                  "editor changed the resolution of frame " + std::to_string(i));
    }
  }
  if (log) log->push_back({"editor", "edit", protocol::digest(request), protocol::digest(response)});

  auto clip = write_clip(video.id, out_dir, response.frames);
  clip.id = video.id + "@" + clip.content_id().substr(0, 12);
  return clip;
}

LossFeedback criticize(VlmPort& vlm, const Frame& frame, const EvaluationInstruction& instruction,
                       std::string_view prompt, const std::vector<std::string>& termination_phrases,
                       CallLog* log) {
  protocol::VlmRequest request{{protocol::VlmPart::image(read_file(frame.image_ref)),
                                protocol::VlmPart::text(instruction.body),
                                protocol::VlmPart::text(std::string(prompt))}};
  auto response = vlm.query(request);
  if (log) log->push_back({"vlm", "criticize", protocol::digest(request), protocol::digest(response)});
  if (text::trim(response.text).empty()) {
    spdlog::warn("VLM returned an empty criticism; treating it as not approved");
    return {response.text, false};
  }
  return {response.text, contains_termination_phrase(response.text, termination_phrases)};
}

std::optional<std::size_t> parse_choice(std::string_view reply, const EvalQuestion& question) {
  const auto n = question.choices.size();
  auto letter_index = [&](char c) -> std::optional<std::size_t> {
    auto idx = static_cast<std::size_t>(std::tolower(static_cast<unsigned char>(c)) - 'a');
    if (idx < n) return idx;
    return std::nullopt;
  };
  auto normalized = text::to_lower(text::trim(reply));
  while (!normalized.empty() && (normalized.back() == '.' || normalized.back() == '!')) normalized.pop_back();

  // "B", "(B)", "B)", "B."
  static const std::regex bare(R"(^\(?([a-z])\)?$)");
  std::smatch m;
  if (std::regex_match(normalized, m, bare)) return letter_index(m[1].str()[0]);
  for (std::size_t i = 0; i < n; ++i) {
    if (normalized == text::to_lower(question.choices[i])) return i;
  }

  // A single "(x)" label anywhere, e.g. "The answer is (B) no".
  static const std::regex paren(R"(\(([a-z])\))");
  std::optional<std::size_t> labelled;
  bool conflict = false;
  for (auto it = std::sregex_iterator(normalized.begin(), normalized.end(), paren);
       it != std::sregex_iterator(); ++it) {
    auto idx = letter_index((*it)[1].str()[0]);
    if (!idx) continue;
    if (labelled && *labelled != *idx) conflict = true;
    labelled = idx;
  }
  if (labelled && !conflict) return labelled;

  // Exactly one choice text among the reply's words.
  const auto words = text::words(normalized);
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < n; ++i) {
    const auto choice_words = text::words(question.choices[i]);
    if (choice_words.empty() || choice_words.size() > words.size()) continue;
    for (std::size_t w = 0; w + choice_words.size() <= words.size(); ++w) {
      if (std::equal(choice_words.begin(), choice_words.end(), words.begin() + static_cast<long>(w))) {
        if (found && *found != i) return std::nullopt;
        found = i;
        break;
      }
    }
  }
  return found;
}

AnswerOutcome answer(VlmPort& vlm, const Frame& frame, const EvalQuestion& question,
                     const PromptTemplates& templates, CallLog* log) {
  protocol::VlmRequest request{{protocol::VlmPart::image(read_file(frame.image_ref)),
                                protocol::VlmPart::text(render_vqa_prompt(question, templates))}};
  auto response = vlm.query(request);
  if (log) log->push_back({"vlm", "answer", protocol::digest(request), protocol::digest(response)});
  return {parse_choice(response.text, question), response.text};
}

std::string describe(VlmPort& vlm, const Frame& frame, std::string_view filter_prompt, CallLog* log) {
  protocol::VlmRequest request{{protocol::VlmPart::image(read_file(frame.image_ref)),
                                protocol::VlmPart::text(std::string(filter_prompt))}};
  auto response = vlm.query(request);
  if (log) log->push_back({"vlm", "describe", protocol::digest(request), protocol::digest(response)});
  return response.text;
}

std::string complete(LlmPort& llm, std::string_view prompt, CallLog* log) {
  if (text::trim(prompt).empty()) throw Error(ErrorCode::precondition, "completion prompt is empty");
  protocol::LlmRequest request{std::string(prompt)};
  auto response = llm.complete(request);
  if (log) log->push_back({"llm", "complete", protocol::digest(request), protocol::digest(response)});
  return response.text;
}

std::vector<EmbeddingVector> embed(EmbedderPort& embedder, const std::vector<std::string>& texts,
                                   CallLog* log) {
  if (texts.empty()) throw Error(ErrorCode::precondition, "nothing to embed");
  protocol::EmbedRequest request{texts};
  auto response = embedder.embed(request);
  if (response.vectors.size() != texts.size()) {
    throw Error(ErrorCode::malformed_response, "embedder returned a different number of vectors");
  }
  if (log) log->push_back({"embedder", "embed", protocol::digest(request), protocol::digest(response)});
  std::vector<EmbeddingVector> out;
  for (auto& v : response.vectors) {
    if (v.size() != static_cast<std::size_t>(response.dim) || v.empty()) {
      throw Error(ErrorCode::malformed_response, "embedding dimension mismatch");
    }
    out.push_back({std::move(v)});
  }
  return out;
}

}  // namespace causal_steer
