#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causal_steer/dataset.hpp"
#include "causal_steer/interventions.hpp"
#include "causal_steer/ports.hpp"
#include "causal_steer/templates.hpp"

namespace causal_steer {

/// Cosine similarity in double precision, clamped to [-1, 1].
/// Errors: dim_mismatch, zero_vector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct EvalItem {
  EvalQuestion question;
  Frame frame;
  std::string run_id;
};

/// One VQA answer; `choice` is empty for an unparseable reply.
struct AnswerRecord {
  std::string run_id;
  std::string variable;
  std::optional<std::size_t> choice;
  std::size_t correct = 0;
  std::string raw;
};

struct VariableScore {
  int correct = 0;
  int total = 0;

  [[nodiscard]] double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
  bool operator==(const VariableScore&) const = default;
};

struct EffectivenessReport {
  std::map<std::string, VariableScore> per_variable;
  int invalid_answers = 0;
  std::vector<AnswerRecord> answers;
  /// Set when a port error aborted the evaluation; the counts cover the
  /// answers gathered before it.
  std::optional<std::string> failure;
};

/// Groups answers by variable; invalid answers count as incorrect.
EffectivenessReport tally(const std::vector<AnswerRecord>& answers);

/// Asks the VLM every question. Answers are gathered with up to `jobs`
/// concurrent requests and tallied in item order. Throws Error(precondition)
/// on an empty item list.
EffectivenessReport effectiveness(const std::vector<EvalItem>& items, VlmPort& vlm,
                                  const PromptTemplates& templates = PromptTemplates::defaults(),
                                  int jobs = 1);

struct MinimalityScore {
  std::string run_id;
  double score = 0.0;
};

struct MinimalityReport {
  std::vector<MinimalityScore> per_pair;
  double mean = 0.0;
};

/// Cosine between embeddings of the two frames' filtered descriptions; both
/// texts go out in one embed request. Throws Error(empty_description).
double minimality(const Frame& factual, const Frame& counterfactual, VlmPort& vlm, EmbedderPort& embedder,
                  const PromptTemplates& templates = PromptTemplates::defaults(), CallLog* log = nullptr);

/// Questions for one counterfactual: one per graph variable whose state the
/// prompt states, or implies through the extracted interventions.
std::vector<EvalQuestion> questions_for_counterfactual(const PromptPair& pair, const CausalGraph& graph,
                                                       const PromptTemplates& templates = PromptTemplates::defaults());

/// A steering run as found on disk.
struct RunArtifacts {
  nlohmann::json trace;
  std::filesystem::path run_dir;

  [[nodiscard]] std::string run_id() const;
  [[nodiscard]] bool failed() const;
};

/// Every <dir>/*/trace.json, sorted by run id. Throws Error(missing_artifacts)
/// when there are none or a referenced video directory is missing.
std::vector<RunArtifacts> load_runs(const std::filesystem::path& runs_dir);

inline constexpr const char* kToolName = "causal-steer";
inline constexpr const char* kToolVersion = "0.1.0";

/// Report columns in display order.
const std::vector<std::string>& report_columns();

struct ReportOptions {
  int jobs = 1;
  const PromptTemplates* templates = nullptr;
};

/// Effectiveness (pooled over all questions, conditioned on intervened
/// variables, and per intervention label) and minimality for each method:
/// the unrefined counterfactual prompt (first iteration) and the steered
/// result. Failed runs are listed as flagged and left out of every number.
nlohmann::json aggregate_report(const std::vector<RunArtifacts>& runs, const Manifest& manifest,
                                const Ports& ports, const ReportOptions& options = {});

/// Aligned text table with the report columns, one row per method.
std::string render_table(const nlohmann::json& report);

}  // namespace causal_steer
