#include "causal_steer/templates.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "causal_steer/error.hpp"
#include "causal_steer/interventions.hpp"
#include "causal_steer/resources.hpp"
#include "causal_steer/text.hpp"

namespace causal_steer {

namespace {

constexpr std::string_view kTemplateNames[] = {
    PromptTemplates::kEvaluationInstruction, PromptTemplates::kCausalDecoupling,
    PromptTemplates::kGradientUpdate,        PromptTemplates::kGradientElicitation,
    PromptTemplates::kMinimality,            PromptTemplates::kVqaInstruction,
    PromptTemplates::kQuestionBank,
};

std::string strip_final_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

void require_text(std::string_view value, std::string_view what) {
  if (text::trim(value).empty()) {
    throw Error(ErrorCode::empty_input, std::string(what) + " must not be empty");
  }
}

}  // namespace

const PromptTemplates& PromptTemplates::defaults() {
  static const PromptTemplates instance = [] {
    PromptTemplates t;
    for (auto name : kTemplateNames) {
      auto text = embedded_resource("templates/" + std::string(name));
      t.texts_.emplace(std::string(name), strip_final_newline(std::string(text.value())));
    }
    return t;
  }();
  return instance;
}

PromptTemplates PromptTemplates::with_overrides(const std::filesystem::path& dir) {
  PromptTemplates t = defaults();
  for (auto name : kTemplateNames) {
    auto path = dir / name;
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::config_error, "cannot read template " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    t.texts_[std::string(name)] = strip_final_newline(buf.str());
  }
  return t;
}

const std::string& PromptTemplates::get(std::string_view name) const {
  auto it = texts_.find(name);
  if (it == texts_.end()) {
    throw Error(ErrorCode::config_error, "unknown template '" + std::string(name) + "'");
  }
  return it->second;
}

EvaluationInstruction render_evaluation_instruction(std::string_view counterfactual_prompt,
                                                    const InterventionSet& interventions,
                                                    const CausalGraph& graph,
                                                    bool causal_decoupling,
                                                    const PromptTemplates& templates) {
  if (interventions.empty()) {
    throw Error(ErrorCode::empty_interventions, "no target interventions to evaluate");
  }
  graph.validate(interventions);
  EvaluationInstruction out;
  out.counterfactual_prompt = std::string(counterfactual_prompt);
  out.target_interventions = render_target_interventions(interventions, graph);
  out.body = text::fill_slots(templates.get(PromptTemplates::kEvaluationInstruction),
                              {{"counterfactual_prompt", out.counterfactual_prompt},
                               {"target_interventions", out.target_interventions}});
  const bool touches_downstream =
      std::any_of(interventions.items().begin(), interventions.items().end(),
                  [&](const Intervention& i) { return graph.is_downstream(i.variable); });
  if (causal_decoupling && touches_downstream) {
    out.body += "\n\n" + render_decoupling_sentence(graph, templates);
    out.decoupled = true;
  }
  return out;
}

std::string render_decoupling_sentence(const CausalGraph& graph, const PromptTemplates& templates) {
  const auto downstream = graph.downstream_variables();
  const auto upstream = graph.parents_of_any(downstream);
  std::string subject;
  if (downstream.size() == 1) {
    subject = downstream.front();
  } else if (downstream.size() == 2) {
    subject = "either " + downstream[0] + " or " + downstream[1];
  } else {
    subject = "any of " + text::disjunction(downstream);
  }
  return text::fill_slots(templates.get(PromptTemplates::kCausalDecoupling),
                          {{"downstream_variables", subject},
                           {"upstream_variables", text::disjunction(upstream)}});
}

std::string render_gradient_prompt(std::string_view prompt, std::string_view loss_feedback,
                                   const PromptTemplates& templates) {
  require_text(prompt, "prompt");
  require_text(loss_feedback, "loss feedback");
  return text::fill_slots(templates.get(PromptTemplates::kGradientUpdate),
                          {{"prompt", std::string(prompt)},
                           {"criticisms", std::string(loss_feedback)}});
}

std::string render_gradient_elicitation(std::string_view prompt, std::string_view criticism,
                                        const PromptTemplates& templates) {
  require_text(prompt, "prompt");
  require_text(criticism, "criticism");
  return text::fill_slots(templates.get(PromptTemplates::kGradientElicitation),
                          {{"prompt", std::string(prompt)},
                           {"criticism", std::string(criticism)}});
}

std::string render_minimality_prompt(const PromptTemplates& templates) {
  return templates.get(PromptTemplates::kMinimality);
}

std::string question_stem(const CausalVariable& variable, const PromptTemplates& templates) {
  const auto bank = nlohmann::json::parse(templates.get(PromptTemplates::kQuestionBank));
  const auto& questions = bank.at("questions");
  if (questions.contains(variable.name)) return questions.at(variable.name).get<std::string>();
  const char* key = variable.is_presence() ? "default_presence_question" : "default_value_question";
  return text::fill_slots(bank.at(key).get<std::string>(), {{"variable", variable.name}});
}

EvalQuestion question_for_value(const CausalVariable& variable, std::string_view value,
                                const PromptTemplates& templates) {
  EvalQuestion q;
  q.variable = variable.name;
  if (variable.is_presence()) {
    q.choices = {"yes", "no"};
    q.choice_values = {std::string(kPresent), std::string(kAbsent)};
  } else {
    q.choice_values = variable.values;
    std::sort(q.choice_values.begin(), q.choice_values.end());
    q.choices = q.choice_values;
  }
  auto it = std::find(q.choice_values.begin(), q.choice_values.end(), value);
  if (it == q.choice_values.end()) {
    throw Error(ErrorCode::precondition, "value '" + std::string(value) +
                                             "' has no choice for variable '" + variable.name + "'");
  }
  q.correct = static_cast<std::size_t>(it - q.choice_values.begin());
  q.question = question_stem(variable, templates);
  for (std::size_t i = 0; i < q.choices.size(); ++i) {
    q.question += " (";
    q.question += static_cast<char>('A' + i);
    q.question += ") " + q.choices[i];
  }
  return q;
}

EvalQuestion question_for(std::string_view variable, std::string_view counterfactual_prompt,
                          const CausalGraph& graph, const PromptTemplates& templates) {
  const auto& var = graph.variable(variable);
  for (const auto& a : parse_attributes(counterfactual_prompt, graph)) {
    if (a.variable != var.name) continue;
    if (a.value == kUnspecified) {
      throw Error(ErrorCode::unspecified_in_prompt,
                  "prompt does not determine variable '" + var.name + "'");
    }
    return question_for_value(var, a.value, templates);
  }
  throw Error(ErrorCode::unknown_variable, "unknown variable '" + var.name + "'");
}

std::string render_vqa_prompt(const EvalQuestion& question, const PromptTemplates& templates) {
  return text::fill_slots(templates.get(PromptTemplates::kVqaInstruction),
                          {{"question", question.question}});
}

}  // namespace causal_steer
