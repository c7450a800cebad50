#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "causal_steer/causal_graph.hpp"

namespace causal_steer {

/// One variable's state as described by a prompt: a value token, "absent",
/// or "unspecified".
struct AttributeAssignment {
  std::string variable;
  std::string value;

  bool operator==(const AttributeAssignment&) const = default;
};

struct PromptPair {
  std::string factual;
  std::string counterfactual;
};

/// Lexicon slot extraction. Returns one assignment per graph variable, in
/// declaration order. Multi-word synonyms match greedily (longest first); a
/// negator ("no", "not", "without", ...) among the three preceding words flips
/// a presence attribute. Throws Error(empty_prompt) and
/// Error(ambiguous_attribute) when two different values of one variable match.
std::vector<AttributeAssignment> parse_attributes(std::string_view prompt,
                                                  const CausalGraph& graph);

/// Literal attribute diff between factual and counterfactual descriptions.
/// A presence attribute mentioned only in the factual prompt becomes "absent".
InterventionSet extract_interventions(const PromptPair& pair, const CausalGraph& graph);

/// "old", "no-beard", "beard".
std::string render_intervention_item(const Intervention& item, const CausalGraph& graph);

/// Intervened variables none of whose parents are also intervened, i.e. the
/// variables the edit was actually aimed at.
std::vector<std::string> primary_variables(const InterventionSet& interventions,
                                           const CausalGraph& graph);

/// The target-interventions line: "woman, no-beard (gender)".
std::string render_target_interventions(const InterventionSet& interventions,
                                        const CausalGraph& graph);

/// Inverse of render_target_interventions. The parenthetical is optional.
InterventionSet parse_target_interventions(std::string_view line, const CausalGraph& graph);

}  // namespace causal_steer
