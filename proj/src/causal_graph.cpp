#include "causal_steer/causal_graph.hpp"

#include <algorithm>
#include <fstream>
#include <functional>

#include "causal_steer/error.hpp"
#include "causal_steer/resources.hpp"

namespace causal_steer {

using nlohmann::json;

bool CausalVariable::is_presence() const {
  return values.size() == 1 && values.front() == kPresent;
}

bool CausalVariable::has_value(std::string_view value) const {
  return std::find(values.begin(), values.end(), value) != values.end();
}

bool CausalVariable::accepts(std::string_view value) const {
  return has_value(value) || (value == kAbsent && is_presence());
}

InterventionSet::InterventionSet(std::initializer_list<Intervention> items) {
  for (const auto& item : items) add(item);
}

void InterventionSet::add(Intervention item) {
  if (contains(item.variable)) {
    throw Error(ErrorCode::precondition,
                "duplicate intervention on variable '" + item.variable + "'");
  }
  items_.push_back(std::move(item));
}

bool InterventionSet::contains(std::string_view variable) const {
  return value_of(variable).has_value();
}

std::optional<std::string> InterventionSet::value_of(std::string_view variable) const {
  for (const auto& item : items_) {
    if (item.variable == variable) return item.value;
  }
  return std::nullopt;
}

namespace {

void check_variable(const CausalVariable& v) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::invalid_graph, "variable '" + v.name + "': " + what);
  };
  if (v.name.empty()) throw Error(ErrorCode::invalid_graph, "variable with empty name");
  if (v.values.empty()) fail("empty value set");
  std::set<std::string> seen;
  for (const auto& value : v.values) {
    if (value.empty() || value == kAbsent || value == kUnspecified) {
      fail("reserved or empty value token '" + value + "'");
    }
    if (!seen.insert(value).second) fail("duplicate value token '" + value + "'");
  }
  std::map<std::string, std::string> owner;
  for (const auto& [value, phrases] : v.synonyms) {
    if (!v.has_value(value) && !(value == kAbsent && v.is_presence())) {
      fail("synonyms for unknown value '" + value + "'");
    }
    for (const auto& phrase : phrases) {
      auto [it, inserted] = owner.emplace(phrase, value);
      if (!inserted && it->second != value) {
        fail("synonym '" + phrase + "' shared by values '" + it->second + "' and '" + value + "'");
      }
    }
  }
}

bool has_cycle(const std::vector<CausalVariable>& vars, const std::vector<Edge>& edges) {
  std::map<std::string, std::vector<std::string>> children;
  for (const auto& e : edges) children[e.parent].push_back(e.child);
  enum class Mark { unvisited, active, done };
  std::map<std::string, Mark> mark;
  std::function<bool(const std::string&)> visit = [&](const std::string& node) {
    auto& m = mark[node];
    if (m == Mark::active) return true;
    if (m == Mark::done) return false;
    m = Mark::active;
    for (const auto& child : children[node]) {
      if (visit(child)) return true;
    }
    mark[node] = Mark::done;
    return false;
  };
  return std::any_of(vars.begin(), vars.end(),
                     [&](const CausalVariable& v) { return visit(v.name); });
}

void reject_unknown_fields(const json& obj, std::initializer_list<std::string_view> allowed,
                           std::string_view where) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::parse_error, std::string(where) + ": expected an object");
  }
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::parse_error,
                  std::string(where) + ": unknown field '" + key + "'");
    }
  }
}

}  // namespace

CausalGraph::CausalGraph(std::vector<CausalVariable> variables, std::vector<Edge> edges)
    : variables_(std::move(variables)) {
  std::set<std::string> names;
  for (const auto& v : variables_) {
    check_variable(v);
    if (!names.insert(v.name).second) {
      throw Error(ErrorCode::invalid_graph, "duplicate variable name '" + v.name + "'");
    }
  }
  std::set<Edge> seen;
  for (auto& e : edges) {
    if (!names.count(e.parent) || !names.count(e.child)) {
      throw Error(ErrorCode::invalid_graph,
                  "edge " + e.parent + " -> " + e.child + " references an unknown variable");
    }
    if (e.parent == e.child) {
      throw Error(ErrorCode::invalid_graph, "self-edge on '" + e.parent + "'");
    }
    if (seen.insert(e).second) edges_.push_back(std::move(e));
  }
  if (has_cycle(variables_, edges_)) {
    throw Error(ErrorCode::invalid_graph, "causal graph contains a cycle");
  }
}

CausalGraph CausalGraph::from_json(const json& doc) {
  try {
    reject_unknown_fields(doc, {"variables", "edges"}, "graph");
    std::vector<CausalVariable> vars;
    for (const auto& jv : doc.at("variables")) {
      reject_unknown_fields(jv, {"name", "values", "synonyms"}, "graph.variables[]");
      CausalVariable v;
      v.name = jv.at("name").get<std::string>();
      v.values = jv.at("values").get<std::vector<std::string>>();
      if (jv.contains("synonyms")) {
        v.synonyms = jv.at("synonyms").get<std::map<std::string, std::vector<std::string>>>();
      }
      vars.push_back(std::move(v));
    }
    std::vector<Edge> edges;
    if (doc.contains("edges")) {
      for (const auto& je : doc.at("edges")) {
        if (!je.is_array() || je.size() != 2) {
          throw Error(ErrorCode::parse_error, "graph.edges[]: expected [parent, child]");
        }
        edges.push_back({je[0].get<std::string>(), je[1].get<std::string>()});
      }
    }
    return CausalGraph(std::move(vars), std::move(edges));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("graph config: ") + e.what());
  }
}

CausalGraph CausalGraph::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::parse_error, "cannot open graph config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
  return from_json(doc);
}

const CausalGraph& CausalGraph::celebv() {
  static const CausalGraph graph = [] {
    auto text = embedded_resource("graphs/celebv_text.json");
    return from_json(json::parse(text.value()));
  }();
  return graph;
}

json CausalGraph::to_json() const {
  json vars = json::array();
  for (const auto& v : variables_) {
    vars.push_back({{"name", v.name}, {"values", v.values}, {"synonyms", v.synonyms}});
  }
  json edges = json::array();
  for (const auto& e : edges_) edges.push_back({e.parent, e.child});
  return {{"variables", vars}, {"edges", edges}};
}

std::vector<std::string> CausalGraph::variable_names() const {
  std::vector<std::string> out;
  for (const auto& v : variables_) out.push_back(v.name);
  return out;
}

bool CausalGraph::contains(std::string_view name) const {
  return std::any_of(variables_.begin(), variables_.end(),
                     [&](const CausalVariable& v) { return v.name == name; });
}

const CausalVariable& CausalGraph::variable(std::string_view name) const {
  for (const auto& v : variables_) {
    if (v.name == name) return v;
  }
  throw Error(ErrorCode::unknown_variable, "unknown variable '" + std::string(name) + "'");
}

std::set<std::string> CausalGraph::parents(std::string_view name) const {
  (void)variable(name);
  std::set<std::string> out;
  for (const auto& e : edges_) {
    if (e.child == name) out.insert(e.parent);
  }
  return out;
}

bool CausalGraph::is_downstream(std::string_view name) const {
  return !parents(name).empty();
}

std::vector<std::string> CausalGraph::downstream_variables() const {
  std::vector<std::string> out;
  for (const auto& v : variables_) {
    if (is_downstream(v.name)) out.push_back(v.name);
  }
  return out;
}

std::vector<std::string> CausalGraph::parents_of_any(const std::vector<std::string>& names) const {
  std::set<std::string> wanted;
  for (const auto& n : names) wanted.merge(parents(n));
  std::vector<std::string> out;
  for (const auto& v : variables_) {
    if (wanted.count(v.name)) out.push_back(v.name);
  }
  return out;
}

void CausalGraph::validate(const InterventionSet& interventions) const {
  for (const auto& item : interventions.items()) {
    const auto& v = variable(item.variable);
    if (!v.accepts(item.value)) {
      throw Error(ErrorCode::precondition, "value '" + item.value +
                                               "' is not valid for variable '" + v.name + "'");
    }
  }
}

bool CausalGraph::operator==(const CausalGraph& other) const {
  return variables_ == other.variables_ &&
         std::set<Edge>(edges_.begin(), edges_.end()) ==
             std::set<Edge>(other.edges_.begin(), other.edges_.end());
}

CausalGraph mutilate(const CausalGraph& graph, const InterventionSet& interventions) {
  for (const auto& item : interventions.items()) (void)graph.variable(item.variable);
  std::vector<Edge> kept;
  for (const auto& e : graph.edges()) {
    if (!interventions.contains(e.child)) kept.push_back(e);
  }
  return CausalGraph(graph.variables(), std::move(kept));
}

}  // namespace causal_steer
