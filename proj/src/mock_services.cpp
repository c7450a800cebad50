#include "causal_steer/mock_services.hpp"

#include <algorithm>
#include <regex>

#include "causal_steer/error.hpp"
#include "causal_steer/interventions.hpp"
#include "causal_steer/media.hpp"
#include "causal_steer/resources.hpp"
#include "causal_steer/text.hpp"

namespace causal_steer {

using nlohmann::json;

namespace {

constexpr std::string_view kInterventionsMarker = "Corresponding interventions are specified:";
constexpr std::string_view kSuggestionMarker = "**Suggested Improvement to the Counterfactual Prompt:**";
constexpr std::string_view kRephraseMarker = "rephrase the variable as \"";
constexpr std::string_view kVariableMarker = "The variable is: ";
constexpr std::string_view kUpdatePrefix = "Below are the criticisms on ";

std::optional<std::string> scripted(const json& tables, const char* kind, std::string_view prompt,
                                    std::optional<bool> approved = std::nullopt) {
  const auto key = text::trim(prompt);
  for (const auto& entry : tables.at("script").at(kind)) {
    if (entry.at("prompt").get<std::string>() != key) continue;
    if (approved && entry.at("approved").get<bool>() != *approved) continue;
    return entry.at("text").get<std::string>();
  }
  return std::nullopt;
}

/// Text of the line following `marker` up to the end of that line.
std::optional<std::string> rest_of_line(std::string_view haystack, std::string_view marker) {
  auto pos = haystack.find(marker);
  if (pos == std::string_view::npos) return std::nullopt;
  pos += marker.size();
  auto end = haystack.find('\n', pos);
  return text::trim(haystack.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
}

/// First double-quoted string after `marker`.
std::optional<std::string> quoted_after(std::string_view haystack, std::string_view marker) {
  auto pos = haystack.find(marker);
  if (pos == std::string_view::npos) return std::nullopt;
  auto open = haystack.find('"', pos + marker.size() - (marker.back() == '"' ? 1 : 0));
  if (open == std::string_view::npos) return std::nullopt;
  auto close = haystack.find('"', open + 1);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(haystack.substr(open + 1, close - open - 1));
}

std::string metadata_value(const json& metadata, const CausalVariable& var) {
  if (metadata.contains(var.name) && metadata.at(var.name).is_string()) {
    return metadata.at(var.name).get<std::string>();
  }
  return var.is_presence() ? std::string(kAbsent) : std::string(kUnspecified);
}

bool satisfied(const json& metadata, const CausalVariable& var, const std::string& target) {
  return metadata_value(metadata, var) == target;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

MockConfig MockConfig::defaults(std::uint64_t seed) {
  MockConfig c;
  c.seed = seed;
  c.tables = json::parse(embedded_resource("mock/mock_services.json").value());
  return c;
}

// --- editor ----------------------------------------------------------------

MockEditor::MockEditor(CausalGraph graph, MockConfig config)
    : graph_(std::move(graph)), config_(std::move(config)) {}

bool MockEditor::triggered(std::string_view prompt) const {
  const auto& cfg = config_.tables.at("editor");
  const auto qualifiers = cfg.at("qualifiers").get<std::vector<std::string>>();
  int count = 0;
  for (const auto& w : text::words(prompt)) {
    if (std::find(qualifiers.begin(), qualifiers.end(), w) != qualifiers.end()) ++count;
  }
  return count >= cfg.at("min_qualifiers").get<int>();
}

protocol::EditResponse MockEditor::edit(const protocol::EditRequest& request) {
  if (request.frames.empty()) throw Error(ErrorCode::service_rejected, "edit request has no frames");
  if (text::trim(request.prompt).empty()) {
    throw Error(ErrorCode::service_rejected, "edit request has an empty prompt");
  }
  for (const auto& f : request.frames) {
    if (!png::is_png(f)) throw Error(ErrorCode::service_rejected, "frames must be PNG images");
  }
  if (!triggered(request.prompt)) return {request.frames};

  std::vector<AttributeAssignment> attributes;
  try {
    attributes = parse_attributes(request.prompt, graph_);
  } catch (const Error&) {
    return {request.frames};
  }
  const auto style = config_.tables.at("editor").at("style_words");
  const auto words = text::words(request.prompt);

  protocol::EditResponse response;
  for (const auto& frame : request.frames) {
    auto meta = frame_metadata(frame);
    for (const auto& a : attributes) {
      if (a.value != kUnspecified) meta[a.variable] = a.value;
    }
    for (const auto& w : words) {
      if (style.contains(w)) meta[style.at(w).at(0).get<std::string>()] = style.at(w).at(1);
    }
    response.frames.push_back(with_frame_metadata(frame, meta));
  }
  return response;
}

// --- vlm -------------------------------------------------------------------

MockVlm::MockVlm(CausalGraph graph, MockConfig config, const PromptTemplates& templates)
    : graph_(std::move(graph)), config_(std::move(config)), templates_(templates) {}

protocol::TextResponse MockVlm::query(const protocol::VlmRequest& request) {
  const std::string* image = nullptr;
  std::vector<const std::string*> texts;
  for (const auto& part : request.parts) {
    if (part.kind == protocol::VlmPart::Kind::image) {
      if (!image) image = &part.data;
    } else {
      texts.push_back(&part.data);
    }
  }
  if (!image || texts.empty()) {
    throw Error(ErrorCode::service_rejected, "expected one image and at least one text part");
  }
  json metadata;
  try {
    metadata = frame_metadata(*image);
  } catch (const Error& e) {
    throw Error(ErrorCode::service_rejected, e.what());
  }

  const std::string& first = *texts.front();
  if (first.find(kInterventionsMarker) != std::string::npos) {
    const std::string prompt = texts.size() > 1 ? *texts.back() : std::string();
    return {criticize(metadata, first, prompt)};
  }
  if (first.find(render_minimality_prompt(templates_).substr(0, 30)) != std::string::npos) {
    return {describe(metadata)};
  }
  return {answer(metadata, first)};
}

std::string MockVlm::criticize(const json& metadata, std::string_view instruction,
                               std::string_view prompt) const {
  InterventionSet targets;
  try {
    targets = parse_target_interventions(rest_of_line(instruction, kInterventionsMarker).value(), graph_);
  } catch (const Error&) {
    return "The target interventions in the instruction could not be interpreted.";
  }
  InterventionSet failed;
  for (const auto& t : targets.items()) {
    if (!satisfied(metadata, graph_.variable(t.variable), t.value)) failed.add(t);
  }
  bool approved = failed.empty();
  if (config_.verdict == MockConfig::Verdict::never) approved = false;
  if (config_.verdict == MockConfig::Verdict::always) approved = true;

  if (auto text = scripted(config_.tables, "criticize", prompt, approved)) return *text;

  const auto rendered = render_target_interventions(targets, graph_);
  if (approved) {
    return "The frame shows every requested change (" + rendered +
           "), and nothing outside the interventions was altered. The response is \"no_optimization\".";
  }

  const auto& openers = config_.tables.at("vlm").at("openers");
  const auto pick = fnv1a(std::to_string(config_.seed) + '\x1f' + std::string(prompt)) % openers.size();
  std::string out = openers.at(pick).get<std::string>();
  out += " The interventions specified were \"" + rendered + "\".\n\n";
  out += "**Accuracy Score:** " + std::to_string(targets.size() - failed.size()) + "/" +
         std::to_string(targets.size()) + "\n\n**Failed Attributes:**\n";
  if (failed.empty()) out += "- none\n";
  for (const auto& f : failed.items()) {
    const auto& var = graph_.variable(f.variable);
    const auto observed = metadata_value(metadata, var);
    out += "- " + var.name + ": expected " + render_intervention_item(f, graph_) + ", observed " +
           (observed == kUnspecified ? std::string("unclear")
                                     : render_intervention_item({var.name, observed}, graph_)) +
           ".\n";
  }
  out += "\n" + std::string(kSuggestionMarker) + "\n\"" +
         suggestion(prompt, failed.empty() ? targets : failed, targets) + "\"";
  return out;
}

std::string MockVlm::suggestion(std::string_view prompt, const InterventionSet& failed,
                                const InterventionSet& targets) const {
  std::string gender;
  if (auto g = targets.value_of("gender")) {
    gender = *g;
  } else {
    try {
      for (const auto& a : parse_attributes(prompt, graph_)) {
        if (a.variable == "gender") gender = a.value;
      }
    } catch (const Error&) {
    }
  }
  const std::string poss = gender == "woman" ? "her" : gender == "man" ? "his" : "their";

  const auto& table = config_.tables.at("vlm").at("suggestions");
  std::vector<std::string> phrases;
  for (const auto& f : failed.items()) {
    const auto key = f.variable + "=" + f.value;
    if (table.contains(key)) {
      phrases.push_back(text::fill_slots(table.at(key).get<std::string>(), {{"poss", poss}}));
    } else {
      phrases.push_back("with clearly visible " + render_intervention_item(f, graph_));
    }
  }
  std::string base = text::trim(prompt);
  while (!base.empty() && (base.back() == '.' || base.back() == '!')) base.pop_back();
  return base + ", " + text::join(phrases, ", ") + ".";
}

std::string MockVlm::describe(const json& metadata) const {
  std::vector<std::string> parts;
  for (const auto& [key, value] : metadata.items()) {
    if (graph_.contains(key)) continue;
    parts.push_back(key + ": " + (value.is_string() ? value.get<std::string>() : value.dump()));
  }
  return text::join(parts, "; ");
}

std::string MockVlm::answer(const json& metadata, std::string_view question) const {
  const std::string unknown = config_.tables.at("vlm").at("unknown_answer").get<std::string>();
  const CausalVariable* target = nullptr;
  std::size_t best = 0;
  for (const auto& v : graph_.variables()) {
    const auto stem = question_stem(v, templates_);
    if (question.find(stem) != std::string_view::npos && stem.size() > best) {
      target = &v;
      best = stem.size();
    }
  }
  if (!target) return unknown;

  const auto observed = metadata_value(metadata, *target);
  std::string wanted;
  if (target->is_presence()) {
    wanted = observed == kPresent ? "yes" : "no";
  } else if (observed != kUnspecified) {
    wanted = observed;
  } else {
    return unknown;
  }
  static const std::regex choice(R"(\(([A-Z])\) ([^()\n]+?)(?= \(|\n|$))");
  for (auto it = std::regex_iterator<std::string_view::const_iterator>(question.begin(), question.end(), choice);
       it != std::regex_iterator<std::string_view::const_iterator>(); ++it) {
    if ((*it)[2].str() == wanted) return "(" + (*it)[1].str() + ")";
  }
  return unknown;
}

// --- llm -------------------------------------------------------------------

MockLlm::MockLlm(MockConfig config) : config_(std::move(config)) {}

protocol::TextResponse MockLlm::complete(const protocol::LlmRequest& request) {
  const std::string_view prompt = request.prompt;
  if (text::trim(prompt).empty()) throw Error(ErrorCode::service_rejected, "empty prompt");

  if (prompt.find("<CRITICISM>") != std::string_view::npos) {
    const auto variable = rest_of_line(prompt, kVariableMarker).value_or("");
    if (auto text = scripted(config_.tables, "gradient", variable)) return {*text};
    std::string out = "The variable \"" + variable +
                      "\" does not state the target interventions with enough specificity, which "
                      "likely contributed to the misalignment reported by the evaluator.\n\n"
                      "**Feedback and Criticism:**\n\n1. **Specificity**: ";
    if (auto s = quoted_after(prompt, kSuggestionMarker)) {
      out += "Follow the evaluator's suggestion and rephrase the variable as \"" + *s + "\".";
    } else {
      out += "Qualify each intervened attribute more precisely.";
    }
    return {out};
  }

  if (prompt.rfind(kUpdatePrefix, 0) == 0) {
    auto end = prompt.find(":\n");
    const auto variable = std::string(prompt.substr(kUpdatePrefix.size(),
                                                    end == std::string_view::npos ? 0 : end - kUpdatePrefix.size()));
    if (auto text = scripted(config_.tables, "update", variable)) return {*text};
    if (auto s = quoted_after(prompt, kRephraseMarker)) return {*s};
    return {variable};
  }
  return {"Acknowledged."};
}

// --- embedder --------------------------------------------------------------

MockEmbedder::MockEmbedder(int dim) : dim_(dim) {
  if (dim_ <= 0) throw Error(ErrorCode::config_error, "embedding dimension must be positive");
}

protocol::EmbedResponse MockEmbedder::embed(const protocol::EmbedRequest& request) {
  if (request.texts.empty()) throw Error(ErrorCode::service_rejected, "no texts to embed");
  protocol::EmbedResponse response;
  response.dim = dim_;
  for (const auto& t : request.texts) {
    std::vector<double> v(static_cast<std::size_t>(dim_), 0.0);
    for (const auto& w : text::words(t)) v[fnv1a(w) % static_cast<std::uint64_t>(dim_)] += 1.0;
    response.vectors.push_back(std::move(v));
  }
  return response;
}

Ports make_mock_ports(const CausalGraph& graph, const MockConfig& config,
                      const PromptTemplates& templates) {
  return Ports{std::make_shared<MockEditor>(graph, config),
               std::make_shared<MockVlm>(graph, config, templates),
               std::make_shared<MockLlm>(config),
               std::make_shared<MockEmbedder>(config.embed_dim)};
}

}  // namespace causal_steer
