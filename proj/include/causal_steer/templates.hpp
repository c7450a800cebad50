#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "causal_steer/causal_graph.hpp"

namespace causal_steer {

/// Named text templates. Defaults are compiled in; a directory of same-named
/// files overrides them one by one.
class PromptTemplates {
 public:
  static const PromptTemplates& defaults();
  static PromptTemplates with_overrides(const std::filesystem::path& dir);

  /// Template text with a single trailing newline removed.
  [[nodiscard]] const std::string& get(std::string_view name) const;

  static constexpr std::string_view kEvaluationInstruction = "evaluation_instruction.txt";
  static constexpr std::string_view kCausalDecoupling = "causal_decoupling.txt";
  static constexpr std::string_view kGradientUpdate = "gradient_update.txt";
  static constexpr std::string_view kGradientElicitation = "gradient_elicitation.txt";
  static constexpr std::string_view kMinimality = "minimality.txt";
  static constexpr std::string_view kVqaInstruction = "vqa_instruction.txt";
  static constexpr std::string_view kQuestionBank = "question_bank.json";

 private:
  std::map<std::string, std::string, std::less<>> texts_;
};

struct EvaluationInstruction {
  std::string body;
  std::string counterfactual_prompt;
  std::string target_interventions;
  bool decoupled = false;
};

struct EvalQuestion {
  std::string variable;
  /// Full question text including the lettered choices.
  std::string question;
  std::vector<std::string> choices;
  /// Value token each choice stands for ("present"/"absent" for yes/no).
  std::vector<std::string> choice_values;
  std::size_t correct = 0;

  bool operator==(const EvalQuestion&) const = default;
};

/// The loss instruction: target prompt and intervention list filled in, plus
/// the decoupling sentence when any intervened variable has parents and
/// `causal_decoupling` is on.
EvaluationInstruction render_evaluation_instruction(
    std::string_view counterfactual_prompt, const InterventionSet& interventions,
    const CausalGraph& graph, bool causal_decoupling = true,
    const PromptTemplates& templates = PromptTemplates::defaults());

/// Graph-generic decoupling sentence. Under the face-attribute graph it reads
/// "If either beard or bald appears in target_interventions, do not include
/// references to age or gender."
std::string render_decoupling_sentence(const CausalGraph& graph,
                                       const PromptTemplates& templates = PromptTemplates::defaults());

/// TGD update meta-prompt.
std::string render_gradient_prompt(std::string_view prompt, std::string_view loss_feedback,
                                   const PromptTemplates& templates = PromptTemplates::defaults());

/// Asks the optimizer LLM for feedback on the prompt given the VLM criticism.
std::string render_gradient_elicitation(std::string_view prompt, std::string_view criticism,
                                        const PromptTemplates& templates = PromptTemplates::defaults());

std::string render_minimality_prompt(const PromptTemplates& templates = PromptTemplates::defaults());

/// Multiple-choice question about `variable` whose correct answer is the state
/// the counterfactual prompt describes. Throws Error(unspecified_in_prompt)
/// when the prompt says nothing about the variable.
EvalQuestion question_for(std::string_view variable, std::string_view counterfactual_prompt,
                          const CausalGraph& graph,
                          const PromptTemplates& templates = PromptTemplates::defaults());

/// Same question with the correct answer given directly as a value token.
EvalQuestion question_for_value(const CausalVariable& variable, std::string_view value,
                                const PromptTemplates& templates = PromptTemplates::defaults());

/// Question text the VLM receives for one effectiveness item.
std::string render_vqa_prompt(const EvalQuestion& question,
                              const PromptTemplates& templates = PromptTemplates::defaults());

/// Question stem for a variable (no choices), as used by question_for.
std::string question_stem(const CausalVariable& variable,
                          const PromptTemplates& templates = PromptTemplates::defaults());

}  // namespace causal_steer
