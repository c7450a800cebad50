#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "causal_steer/causal_graph.hpp"
#include "causal_steer/commands.hpp"
#include "causal_steer/dataset.hpp"
#include "causal_steer/error.hpp"
#include "causal_steer/evaluation.hpp"
#include "causal_steer/interventions.hpp"
#include "causal_steer/templates.hpp"

namespace py = pybind11;
using namespace causal_steer;
using nlohmann::json;

namespace {

py::object to_python(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_python(const py::object& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

CausalGraph graph_of(const std::optional<py::object>& graph) {
  if (!graph || graph->is_none()) return CausalGraph::celebv();
  if (py::isinstance<py::str>(*graph)) return CausalGraph::load(graph->cast<std::string>());
  return CausalGraph::from_json(from_python(*graph));
}

InterventionSet interventions_of(const std::vector<std::pair<std::string, std::string>>& items) {
  InterventionSet set;
  for (const auto& [variable, value] : items) set.add({variable, value});
  return set;
}

std::vector<std::pair<std::string, std::string>> pairs_of(const InterventionSet& set) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& i : set.items()) out.emplace_back(i.variable, i.value);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Causal counterfactual video steering core";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&] { return py::object(py::exception<Error>(m, "CausalSteerError", PyExc_RuntimeError)); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const auto& type = error_type.get_stored();
      py::object instance = type(e.what());
      instance.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(type.ptr(), instance.ptr());
    }
  });

  m.attr("version") = kToolVersion;

  m.def("builtin_graph", [] { return to_python(CausalGraph::celebv().to_json()); },
        "The face-attribute causal graph as a JSON-compatible dict.");

  m.def(
      "parse_attributes",
      [](const std::string& prompt, const std::optional<py::object>& graph) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& a : parse_attributes(prompt, graph_of(graph))) out.emplace_back(a.variable, a.value);
        return out;
      },
      py::arg("prompt"), py::arg("graph") = py::none());

  m.def(
      "extract_interventions",
      [](const std::string& factual, const std::string& counterfactual, const std::optional<py::object>& graph) {
        return pairs_of(extract_interventions({factual, counterfactual}, graph_of(graph)));
      },
      py::arg("factual"), py::arg("counterfactual"), py::arg("graph") = py::none());

  m.def(
      "render_target_interventions",
      [](const std::vector<std::pair<std::string, std::string>>& items, const std::optional<py::object>& graph) {
        return render_target_interventions(interventions_of(items), graph_of(graph));
      },
      py::arg("interventions"), py::arg("graph") = py::none());

  m.def(
      "render_evaluation_instruction",
      [](const std::string& counterfactual, const std::vector<std::pair<std::string, std::string>>& items,
         bool causal_decoupling, const std::optional<py::object>& graph) {
        const auto r = render_evaluation_instruction(counterfactual, interventions_of(items), graph_of(graph),
                                                     causal_decoupling);
        py::dict d;
        d["body"] = r.body;
        d["counterfactual_prompt"] = r.counterfactual_prompt;
        d["target_interventions"] = r.target_interventions;
        d["decoupled"] = r.decoupled;
        return d;
      },
      py::arg("counterfactual"), py::arg("interventions"), py::arg("causal_decoupling") = true,
      py::arg("graph") = py::none());

  m.def(
      "mutilate",
      [](const std::vector<std::pair<std::string, std::string>>& items, const std::optional<py::object>& graph) {
        return to_python(mutilate(graph_of(graph), interventions_of(items)).to_json());
      },
      py::arg("interventions"), py::arg("graph") = py::none());

  m.def(
      "parents",
      [](const std::string& variable, const std::optional<py::object>& graph) {
        const auto p = graph_of(graph).parents(variable);
        return std::vector<std::string>(p.begin(), p.end());
      },
      py::arg("variable"), py::arg("graph") = py::none());

  m.def(
      "cosine",
      [](std::vector<double> a, std::vector<double> b) { return cosine({std::move(a)}, {std::move(b)}); },
      py::arg("a"), py::arg("b"));

  m.def(
      "load_manifest", [](const std::filesystem::path& path) { return to_python(to_json(load_manifest(path))); },
      py::arg("path"), "Validates a manifest (frames included) and returns it as a dict.");

  m.def(
      "steer",
      [](const std::filesystem::path& manifest, const std::filesystem::path& out, std::vector<std::string> items,
         std::vector<std::string> labels, bool mock, int max_iters, bool causal_decoupling, bool render_final,
         bool fixed_clock, int jobs) {
        SteerOptions o;
        o.manifest = manifest;
        o.out = out;
        o.items = std::move(items);
        o.labels = std::move(labels);
        o.mock = mock;
        o.max_iters = max_iters;
        o.causal_decoupling = causal_decoupling;
        o.render_final = render_final;
        o.fixed_clock = fixed_clock;
        o.jobs = jobs;
        py::gil_scoped_release release;
        return cmd_steer(o);
      },
      py::arg("manifest"), py::arg("out"), py::arg("items") = std::vector<std::string>{"all"},
      py::arg("labels") = intervention_labels(), py::arg("mock") = false, py::arg("max_iters") = 2,
      py::arg("causal_decoupling") = true, py::arg("render_final") = false, py::arg("fixed_clock") = false,
      py::arg("jobs") = 1, "Runs the steering sweep; returns the CLI exit status.");

  m.def(
      "evaluate",
      [](std::vector<std::filesystem::path> runs, const std::filesystem::path& out, const std::string& name,
         bool mock, int jobs) {
        EvaluateOptions o;
        o.runs = std::move(runs);
        o.out = out;
        o.name = name;
        o.mock = mock;
        o.jobs = jobs;
        py::gil_scoped_release release;
        return cmd_evaluate(o);
      },
      py::arg("runs"), py::arg("out"), py::arg("name") = "report", py::arg("mock") = false, py::arg("jobs") = 1,
      "Writes <out>/<name>.json; returns the CLI exit status.");
}
