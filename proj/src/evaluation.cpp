#include "causal_steer/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "causal_steer/error.hpp"
#include "causal_steer/interventions.hpp"
#include "causal_steer/steering.hpp"
#include "causal_steer/text.hpp"

namespace causal_steer {

namespace fs = std::filesystem;
using nlohmann::json;

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::dim_mismatch,
                "cosine of " + std::to_string(a.dim()) + "- and " + std::to_string(b.dim()) + "-dim vectors");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.components[i] * b.components[i];
    na += a.components[i] * a.components[i];
    nb += b.components[i] * b.components[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::zero_vector, "cosine is undefined for a zero vector");
  // sqrt(na*nb) keeps cosine(a,b) == cosine(b,a) bit for bit.
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

namespace {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// stops further work and is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !stop; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          stop = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

EffectivenessReport tally(const std::vector<AnswerRecord>& answers) {
  EffectivenessReport report;
  for (const auto& a : answers) {
    auto& score = report.per_variable[a.variable];
    ++score.total;
    if (!a.choice) {
      ++report.invalid_answers;
    } else if (*a.choice == a.correct) {
      ++score.correct;
    }
  }
  report.answers = answers;
  return report;
}

EffectivenessReport effectiveness(const std::vector<EvalItem>& items, VlmPort& vlm,
                                  const PromptTemplates& templates, int jobs) {
  if (items.empty()) throw Error(ErrorCode::precondition, "no evaluation items");
  std::vector<std::optional<AnswerRecord>> slots(items.size());
  std::optional<std::string> failure;
  try {
    parallel_for(items.size(), jobs, [&](std::size_t i) {
      const auto& item = items[i];
      auto outcome = answer(vlm, item.frame, item.question, templates);
      if (!outcome.choice) spdlog::warn("[{}] unparseable answer to the {} question: \"{}\"", item.run_id,
                                        item.question.variable, outcome.raw);
      slots[i] = AnswerRecord{item.run_id, item.question.variable, outcome.choice, item.question.correct,
                              std::move(outcome.raw)};
    });
  } catch (const Error& e) {
    failure = e.what();
    spdlog::error("effectiveness aborted: {}", e.what());
  }
  std::vector<AnswerRecord> answers;
  for (auto& s : slots) {
    if (s) answers.push_back(std::move(*s));
  }
  auto report = tally(answers);
  report.failure = failure;
  return report;
}

double minimality(const Frame& factual, const Frame& counterfactual, VlmPort& vlm, EmbedderPort& embedder,
                  const PromptTemplates& templates, CallLog* log) {
  const auto filter = render_minimality_prompt(templates);
  const auto a = describe(vlm, factual, filter, log);
  const auto b = describe(vlm, counterfactual, filter, log);
  if (text::trim(a).empty() || text::trim(b).empty()) {
    throw Error(ErrorCode::empty_description, "the VLM returned an empty frame description");
  }
  const auto vectors = embed(embedder, {a, b}, log);
  return cosine(vectors[0], vectors[1]);
}

std::vector<EvalQuestion> questions_for_counterfactual(const PromptPair& pair, const CausalGraph& graph,
                                                       const PromptTemplates& templates) {
  const auto parsed = parse_attributes(pair.counterfactual, graph);
  const auto interventions = extract_interventions(pair, graph);
  std::vector<EvalQuestion> out;
  for (const auto& a : parsed) {
    std::string value = a.value;
    if (value == kUnspecified) {
      if (auto implied = interventions.value_of(a.variable)) value = *implied;
    }
    if (value == kUnspecified) continue;
    out.push_back(question_for_value(graph.variable(a.variable), value, templates));
  }
  return out;
}

std::string RunArtifacts::run_id() const { return trace.value("run_id", run_dir.filename().string()); }

bool RunArtifacts::failed() const { return trace.value("status", "") == "failed"; }

std::vector<RunArtifacts> load_runs(const fs::path& runs_dir) {
  if (!fs::is_directory(runs_dir)) {
    throw Error(ErrorCode::missing_artifacts, "run directory " + runs_dir.string() + " does not exist");
  }
  std::vector<RunArtifacts> runs;
  for (const auto& entry : fs::directory_iterator(runs_dir)) {
    const auto trace_path = entry.path() / "trace.json";
    if (!entry.is_directory() || !fs::is_regular_file(trace_path)) continue;
    RunArtifacts run;
    run.run_dir = entry.path();
    try {
      run.trace = json::parse(read_file(trace_path));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::missing_artifacts, trace_path.string() + " is unreadable: " + e.what());
    }
    for (const char* key : {"run_id", "dataset_item", "label", "factual_prompt", "initial_prompt", "interventions",
                            "config", "records", "status"}) {
      if (!run.trace.contains(key)) {
        throw Error(ErrorCode::missing_artifacts, trace_path.string() + " lacks '" + key + "'");
      }
    }
    if (!run.failed()) {
      std::vector<std::string> dirs = {"iter_1", run.trace.at("final_video").at("dir").get<std::string>()};
      if (run.trace.contains("final_render")) dirs.push_back(run.trace["final_render"]["dir"].get<std::string>());
      for (const auto& d : dirs) {
        if (!fs::is_directory(run.run_dir / d)) {
          throw Error(ErrorCode::missing_artifacts, "missing video directory " + (run.run_dir / d).string());
        }
      }
    }
    runs.push_back(std::move(run));
  }
  if (runs.empty()) throw Error(ErrorCode::missing_artifacts, "no run traces under " + runs_dir.string());
  std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) {
    return std::make_pair(a.run_id(), a.run_dir) < std::make_pair(b.run_id(), b.run_dir);
  });
  return runs;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> columns = {"age", "gender", "beard", "bald", "VLM-Min"};
  return columns;
}

namespace {

constexpr const char* kInitialMethod = "initial-prompt";

json scores_json(const std::map<std::string, VariableScore>& scores) {
  json out = json::object();
  for (const auto& [var, s] : scores) {
    out[var] = {{"correct", s.correct},
                {"total", s.total},
                {"accuracy", s.total == 0 ? json(nullptr) : json(s.accuracy())}};
  }
  return out;
}

struct MethodRun {
  const RunArtifacts* run;
  std::string video_dir;
};

json evaluate_method(const std::string& name, const std::vector<MethodRun>& members,
                     const std::vector<std::string>& flagged, const Manifest& manifest, const CausalGraph& graph,
                     const Ports& ports, const ReportOptions& options) {
  const auto& templates = options.templates ? *options.templates : PromptTemplates::defaults();

  std::vector<EvalItem> items;
  std::vector<std::pair<std::string, std::set<std::string>>> intervened;  // per item: label, variables
  std::vector<std::pair<std::string, std::pair<Frame, Frame>>> pairs;
  json runs = json::array();
  for (const auto& m : members) {
    const auto& trace = m.run->trace;
    const auto run_id = m.run->run_id();
    runs.push_back(run_id);
    const PromptPair pair{trace.at("factual_prompt").get<std::string>(), trace.at("initial_prompt").get<std::string>()};
    const auto selector = FrameSelector::parse(trace.at("config").at("frame_selector").get<std::string>());
    const auto clip = load_clip(run_id, m.run->run_dir / m.video_dir);
    const auto& cf_frame = select_frame(clip, selector);
    const auto& item = manifest.item(trace.at("dataset_item").get<std::string>());
    if (cf_frame.index >= item.video.size()) {
      throw Error(ErrorCode::missing_artifacts, "run " + run_id + " has more frames than its source clip");
    }
    std::set<std::string> vars;
    for (const auto& iv : trace.at("interventions").at("items")) vars.insert(iv.at("variable").get<std::string>());
    for (auto& q : questions_for_counterfactual(pair, graph, templates)) {
      items.push_back({std::move(q), cf_frame, run_id});
      intervened.emplace_back(trace.at("label").get<std::string>(), vars);
    }
    pairs.push_back({run_id, {item.video.frames[cf_frame.index], cf_frame}});
  }

  json out = {{"name", name}, {"runs", runs}, {"flagged", flagged}};
  json row = json::object();
  for (const auto& c : report_columns()) row[c] = nullptr;

  if (!items.empty()) {
    auto report = effectiveness(items, *ports.vlm, templates, options.jobs);
    if (report.failure) throw Error(ErrorCode::service_unreachable, *report.failure);
    std::vector<AnswerRecord> conditioned;
    std::map<std::string, std::vector<AnswerRecord>> by_label;
    for (std::size_t i = 0; i < report.answers.size(); ++i) {
      const auto& a = report.answers[i];
      if (intervened[i].second.contains(a.variable)) conditioned.push_back(a);
      by_label[intervened[i].first].push_back(a);
    }
    json by_intervention = json::object();
    for (const auto& [label, answers] : by_label) by_intervention[label] = scores_json(tally(answers).per_variable);
    out["effectiveness"] = {{"pooled", scores_json(report.per_variable)},
                            {"conditioned", scores_json(tally(conditioned).per_variable)},
                            {"by_intervention", by_intervention},
                            {"items", report.answers.size()},
                            {"invalid_answers", report.invalid_answers}};
    for (const auto& [var, s] : report.per_variable) {
      if (row.contains(var) && s.total > 0) row[var] = s.accuracy();
    }
  } else {
    out["effectiveness"] = nullptr;
  }

  std::vector<double> scores(pairs.size());
  parallel_for(pairs.size(), options.jobs, [&](std::size_t i) {
    scores[i] = minimality(pairs[i].second.first, pairs[i].second.second, *ports.vlm, *ports.embedder, templates);
  });
  json per_pair = json::array();
  double sum = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    per_pair.push_back({{"run_id", pairs[i].first}, {"score", scores[i]}});
    sum += scores[i];
  }
  const json mean = pairs.empty() ? json(nullptr) : json(sum / static_cast<double>(pairs.size()));
  out["minimality"] = {{"per_pair", per_pair}, {"mean", mean}};
  row["VLM-Min"] = mean;
  out["row"] = row;
  return out;
}

}  // namespace

json aggregate_report(const std::vector<RunArtifacts>& runs, const Manifest& manifest, const Ports& ports,
                      const ReportOptions& options) {
  if (runs.empty()) throw Error(ErrorCode::missing_artifacts, "no runs to report on");
  const auto graph = manifest.graph();

  std::vector<std::string> flagged;
  std::vector<MethodRun> initial;
  std::set<std::pair<std::string, std::string>> seen_initial;
  std::map<std::string, std::vector<MethodRun>> steered;
  for (const auto& run : runs) {
    if (run.failed()) {
      flagged.push_back(run.run_id());
      continue;
    }
    const auto key = std::make_pair(run.trace.at("dataset_item").get<std::string>(), run.trace.at("label").get<std::string>());
    if (seen_initial.insert(key).second) initial.push_back({&run, "iter_1"});
    const bool decoupled = run.trace.at("config").value("causal_decoupling", true);
    const auto dir = run.trace.contains("final_render") ? run.trace["final_render"]["dir"].get<std::string>()
                                                        : run.trace.at("final_video").at("dir").get<std::string>();
    steered[decoupled ? "vlm-steering w/ causal dec" : "vlm-steering w/o causal dec"].push_back({&run, dir});
  }
  if (!flagged.empty()) spdlog::warn("{} failed run(s) excluded from the report", flagged.size());

  json methods = json::array();
  methods.push_back(evaluate_method(kInitialMethod, initial, flagged, manifest, graph, ports, options));
  for (const auto& [name, members] : steered) {
    methods.push_back(evaluate_method(name, members, flagged, manifest, graph, ports, options));
  }
  return {{"tool", kToolName},
          {"version", kToolVersion},
          {"columns", report_columns()},
          {"manifest_version", manifest.version},
          {"methods", methods}};
}

std::string render_table(const json& report) {
  std::vector<std::string> header = {"method"};
  for (const auto& c : report.at("columns")) header.push_back(c.get<std::string>());
  std::vector<std::vector<std::string>> rows = {header};
  for (const auto& m : report.at("methods")) {
    std::vector<std::string> row = {m.at("name").get<std::string>()};
    for (std::size_t i = 1; i < header.size(); ++i) {
      const auto& v = m.at("row").at(header[i]);
      if (v.is_null()) {
        row.push_back("-");
      } else {
        std::ostringstream s;
        s << std::fixed << std::setprecision(3) << v.get<double>();
        row.push_back(s.str());
      }
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], r[i].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      if (i == 0) {
        out << std::left << std::setw(static_cast<int>(widths[i])) << rows[r][i];
      } else {
        out << "  " << std::right << std::setw(static_cast<int>(widths[i])) << rows[r][i];
      }
    }
    out << "\n";
    if (r == 0) {
      std::size_t total = widths[0];
      for (std::size_t i = 1; i < widths.size(); ++i) total += widths[i] + 2;
      out << std::string(total, '-') << "\n";
    }
  }
  return out.str();
}

}  // namespace causal_steer
