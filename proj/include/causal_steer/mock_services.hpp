#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "causal_steer/causal_graph.hpp"
#include "causal_steer/ports.hpp"
#include "causal_steer/templates.hpp"

namespace causal_steer {

/// Deterministic stand-ins for the four model services. Attributes live in
/// per-frame PNG metadata: the editor writes them, the VLM reads them.
struct MockConfig {
  enum class Verdict { automatic, never, always };

  std::uint64_t seed = 0;
  Verdict verdict = Verdict::automatic;
  int embed_dim = 384;
  /// Tables from resources/mock/mock_services.json (editor trigger words,
  /// criticism phrasing, scripted fixtures).
  nlohmann::json tables;

  static MockConfig defaults(std::uint64_t seed = 0);
};

/// Applies a prompt's parsed attributes to every frame's metadata, but only
/// when the prompt carries at least `min_qualifiers` qualifier words (a
/// specificity trigger). Unqualified prompts return the frames unchanged.
class MockEditor final : public VideoEditorPort {
 public:
  MockEditor(CausalGraph graph, MockConfig config);
  protocol::EditResponse edit(const protocol::EditRequest& request) override;

  /// Whether `prompt` passes the specificity trigger.
  [[nodiscard]] bool triggered(std::string_view prompt) const;

 private:
  CausalGraph graph_;
  MockConfig config_;
};

/// Dispatches on the request text: evaluation instruction -> criticism,
/// minimality prompt -> description, VQA question -> lettered answer.
class MockVlm final : public VlmPort {
 public:
  MockVlm(CausalGraph graph, MockConfig config,
          const PromptTemplates& templates = PromptTemplates::defaults());
  protocol::TextResponse query(const protocol::VlmRequest& request) override;

 private:
  std::string criticize(const nlohmann::json& metadata, std::string_view instruction,
                        std::string_view prompt) const;
  std::string describe(const nlohmann::json& metadata) const;
  std::string answer(const nlohmann::json& metadata, std::string_view question) const;
  std::string suggestion(std::string_view prompt, const InterventionSet& failed,
                         const InterventionSet& targets) const;

  CausalGraph graph_;
  MockConfig config_;
  PromptTemplates templates_;
};

/// Handles the gradient-elicitation and TGD-update templates; scripted
/// fixtures first, then a rule that carries the evaluator's suggested prompt
/// through the gradient into the update.
class MockLlm final : public LlmPort {
 public:
  explicit MockLlm(MockConfig config);
  protocol::TextResponse complete(const protocol::LlmRequest& request) override;

 private:
  MockConfig config_;
};

/// Hashed bag-of-words vectors (FNV-1a over lowercased words).
class MockEmbedder final : public EmbedderPort {
 public:
  explicit MockEmbedder(int dim = 384);
  protocol::EmbedResponse embed(const protocol::EmbedRequest& request) override;

 private:
  int dim_;
};

Ports make_mock_ports(const CausalGraph& graph, const MockConfig& config,
                      const PromptTemplates& templates = PromptTemplates::defaults());

/// FNV-1a 64-bit.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 14695981039346656037ULL);

}  // namespace causal_steer
