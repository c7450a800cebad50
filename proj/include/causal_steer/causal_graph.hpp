#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace causal_steer {

/// Distinguished value tokens shared by every variable.
inline constexpr std::string_view kAbsent = "absent";
inline constexpr std::string_view kPresent = "present";
inline constexpr std::string_view kUnspecified = "unspecified";

/// A causal variable with its value lexicon.
///
/// A variable whose only value is "present" is a presence attribute (beard,
/// bald): it can be removed, so "absent" is a meaningful value for it.
struct CausalVariable {
  std::string name;
  std::vector<std::string> values;
  /// value token (or "absent") -> surface phrases.
  std::map<std::string, std::vector<std::string>> synonyms;

  [[nodiscard]] bool is_presence() const;
  [[nodiscard]] bool has_value(std::string_view value) const;
  /// Valid intervention target: a declared value, or "absent" for a presence
  /// attribute.
  [[nodiscard]] bool accepts(std::string_view value) const;

  bool operator==(const CausalVariable&) const = default;
};

struct Edge {
  std::string parent;
  std::string child;

  auto operator<=>(const Edge&) const = default;
};

struct Intervention {
  std::string variable;
  std::string value;

  bool operator==(const Intervention&) const = default;
};

/// Ordered intervention list with at most one entry per variable.
class InterventionSet {
 public:
  InterventionSet() = default;
  InterventionSet(std::initializer_list<Intervention> items);

  /// Throws Error(precondition) if the variable is already present.
  void add(Intervention item);

  [[nodiscard]] const std::vector<Intervention>& items() const noexcept { return items_; }
  [[nodiscard]] bool empty() const noexcept { return items_.empty(); }
  [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
  [[nodiscard]] bool contains(std::string_view variable) const;
  [[nodiscard]] std::optional<std::string> value_of(std::string_view variable) const;

  bool operator==(const InterventionSet&) const = default;

 private:
  std::vector<Intervention> items_;
};

/// Variables with value lexicons plus directed causal edges. Immutable once
/// constructed; the constructor enforces name uniqueness, edge validity and
/// acyclicity.
class CausalGraph {
 public:
  CausalGraph(std::vector<CausalVariable> variables, std::vector<Edge> edges);

  /// Strict loader: rejects unknown fields anywhere in the document.
  static CausalGraph from_json(const nlohmann::json& doc);
  static CausalGraph load(const std::filesystem::path& path);
  /// The four-variable face-attribute graph shipped with the library.
  static const CausalGraph& celebv();

  [[nodiscard]] nlohmann::json to_json() const;

  [[nodiscard]] const std::vector<CausalVariable>& variables() const noexcept { return variables_; }
  [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
  [[nodiscard]] std::vector<std::string> variable_names() const;

  [[nodiscard]] bool contains(std::string_view name) const;
  /// Throws Error(unknown_variable).
  [[nodiscard]] const CausalVariable& variable(std::string_view name) const;

  [[nodiscard]] std::set<std::string> parents(std::string_view name) const;
  [[nodiscard]] bool is_downstream(std::string_view name) const;

  /// Variables with at least one parent, in declaration order.
  [[nodiscard]] std::vector<std::string> downstream_variables() const;
  /// Union of the parents of `names`, in declaration order.
  [[nodiscard]] std::vector<std::string> parents_of_any(const std::vector<std::string>& names) const;

  /// Throws Error(unknown_variable / precondition) if `interventions` does not
  /// fit this graph.
  void validate(const InterventionSet& interventions) const;

  bool operator==(const CausalGraph& other) const;

 private:
  std::vector<CausalVariable> variables_;
  std::vector<Edge> edges_;
};

/// do-operator: drops every edge whose child is intervened on.
CausalGraph mutilate(const CausalGraph& graph, const InterventionSet& interventions);

}  // namespace causal_steer
