#include "causal_steer/interventions.hpp"

#include <algorithm>
#include <array>
#include <optional>

#include "causal_steer/error.hpp"
#include "causal_steer/text.hpp"

namespace causal_steer {

namespace {

constexpr std::size_t kNegationWindow = 3;
constexpr std::array<std::string_view, 10> kNegators = {
    "no", "not", "without", "never", "doesnt", "isnt", "dont", "lacks", "lacking", "nor"};

struct Phrase {
  std::size_t variable;
  std::string value;
  std::vector<std::string> words;
  std::string surface;
};

std::vector<Phrase> build_lexicon(const CausalGraph& graph) {
  std::vector<Phrase> out;
  const auto& vars = graph.variables();
  for (std::size_t vi = 0; vi < vars.size(); ++vi) {
    const auto& v = vars[vi];
    std::vector<std::string> targets = v.values;
    if (v.is_presence()) targets.emplace_back(kAbsent);
    for (const auto& value : targets) {
      std::vector<std::string> phrases;
      if (auto it = v.synonyms.find(value); it != v.synonyms.end()) phrases = it->second;
      if (value != kPresent && value != kAbsent &&
          std::find(phrases.begin(), phrases.end(), value) == phrases.end()) {
        phrases.push_back(value);
      }
      for (const auto& p : phrases) {
        auto w = text::words(p);
        if (!w.empty()) out.push_back({vi, value, std::move(w), p});
      }
    }
  }
  return out;
}

bool negated(const std::vector<std::string>& tokens, std::size_t pos) {
  std::size_t from = pos > kNegationWindow ? pos - kNegationWindow : 0;
  for (std::size_t i = from; i < pos; ++i) {
    if (std::find(kNegators.begin(), kNegators.end(), tokens[i]) != kNegators.end()) return true;
  }
  return false;
}

struct Match {
  std::string value;
  std::string surface;
};

}  // namespace

std::vector<AttributeAssignment> parse_attributes(std::string_view prompt,
                                                  const CausalGraph& graph) {
  if (text::trim(prompt).empty()) throw Error(ErrorCode::empty_prompt, "prompt is empty");

  const auto lexicon = build_lexicon(graph);
  const auto tokens = text::words(prompt);
  const auto& vars = graph.variables();
  std::vector<std::optional<Match>> found(vars.size());

  std::size_t i = 0;
  while (i < tokens.size()) {
    const Phrase* best = nullptr;
    for (const auto& phrase : lexicon) {
      const auto n = phrase.words.size();
      if (i + n > tokens.size()) continue;
      if (!std::equal(phrase.words.begin(), phrase.words.end(), tokens.begin() + i)) continue;
      if (!best || n > best->words.size()) best = &phrase;
    }
    if (!best) {
      ++i;
      continue;
    }
    const auto& var = vars[best->variable];
    std::string value = best->value;
    bool skip = false;
    if (negated(tokens, i)) {
      if (var.is_presence()) {
        value = value == kAbsent ? std::string(kPresent) : std::string(kAbsent);
      } else {
        skip = true;
      }
    }
    if (!skip) {
      auto& slot = found[best->variable];
      if (!slot) {
        slot = Match{value, best->surface};
      } else if (slot->value != value) {
        throw Error(ErrorCode::ambiguous_attribute,
                    "variable '" + var.name + "' matched both '" + slot->value + "' (\"" +
                        slot->surface + "\") and '" + value + "' (\"" + best->surface + "\")");
      }
    }
    i += best->words.size();
  }

  std::vector<AttributeAssignment> out;
  for (std::size_t vi = 0; vi < vars.size(); ++vi) {
    out.push_back({vars[vi].name, found[vi] ? found[vi]->value : std::string(kUnspecified)});
  }
  return out;
}

InterventionSet extract_interventions(const PromptPair& pair, const CausalGraph& graph) {
  const auto factual = parse_attributes(pair.factual, graph);
  const auto counterfactual = parse_attributes(pair.counterfactual, graph);
  InterventionSet out;
  for (std::size_t i = 0; i < factual.size(); ++i) {
    const auto& f = factual[i].value;
    const auto& c = counterfactual[i].value;
    if (f == c) continue;
    const auto& var = graph.variable(factual[i].variable);
    if (c == kUnspecified) {
      if (var.is_presence() && f != kAbsent) out.add({var.name, std::string(kAbsent)});
      continue;
    }
    out.add({var.name, c});
  }
  return out;
}

std::string render_intervention_item(const Intervention& item, const CausalGraph& graph) {
  const auto& var = graph.variable(item.variable);
  if (item.value == kAbsent) return "no-" + var.name;
  if (item.value == kPresent && var.is_presence()) return var.name;
  return item.value;
}

std::vector<std::string> primary_variables(const InterventionSet& interventions,
                                           const CausalGraph& graph) {
  std::vector<std::string> out;
  for (const auto& item : interventions.items()) {
    const auto parents = graph.parents(item.variable);
    bool driven = std::any_of(parents.begin(), parents.end(),
                              [&](const std::string& p) { return interventions.contains(p); });
    if (!driven) out.push_back(item.variable);
  }
  return out;
}

std::string render_target_interventions(const InterventionSet& interventions,
                                        const CausalGraph& graph) {
  std::vector<std::string> items;
  for (const auto& item : interventions.items()) {
    items.push_back(render_intervention_item(item, graph));
  }
  return text::join(items, ", ") + " (" +
         text::join(primary_variables(interventions, graph), ", ") + ")";
}

InterventionSet parse_target_interventions(std::string_view line, const CausalGraph& graph) {
  std::string body = text::trim(line);
  if (!body.empty() && body.back() == ')') {
    if (auto open = body.rfind('('); open != std::string::npos) body = text::trim(body.substr(0, open));
  }
  InterventionSet out;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto comma = body.find(',', pos);
    auto item = text::trim(body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    pos = comma == std::string::npos ? body.size() + 1 : comma + 1;
    if (item.empty()) continue;
    if (item.rfind("no-", 0) == 0 && graph.contains(item.substr(3))) {
      out.add({item.substr(3), std::string(kAbsent)});
      continue;
    }
    if (graph.contains(item) && graph.variable(item).is_presence()) {
      out.add({item, std::string(kPresent)});
      continue;
    }
    const CausalVariable* owner = nullptr;
    for (const auto& v : graph.variables()) {
      if (!v.has_value(item)) continue;
      if (owner) {
        throw Error(ErrorCode::parse_error, "intervention item '" + item + "' is ambiguous");
      }
      owner = &v;
    }
    if (!owner) throw Error(ErrorCode::parse_error, "unknown intervention item '" + item + "'");
    out.add({owner->name, item});
  }
  return out;
}

}  // namespace causal_steer
