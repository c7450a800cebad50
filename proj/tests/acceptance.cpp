// Acceptance suite: one PASS/FAIL line per criterion, each with a pinned
// runtime limit. Exit status is nonzero when any criterion fails.
//
// CAUSAL_STEER_UPDATE_GOLDEN=1 rewrites the golden trace and report under
// fixtures/golden/ instead of comparing against them.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "causal_steer/causal_graph.hpp"
#include "causal_steer/dataset.hpp"
#include "causal_steer/evaluation.hpp"
#include "causal_steer/interventions.hpp"
#include "causal_steer/mock_services.hpp"
#include "causal_steer/protocol.hpp"
#include "causal_steer/steering.hpp"
#include "causal_steer/templates.hpp"
#include "support.hpp"

using namespace causal_steer;
using nlohmann::json;
using test_support::TempDir;
namespace fs = std::filesystem;

namespace {

using Failures = std::vector<std::string>;

// Tolerances.
constexpr double kCosineTol = 1e-12;

// Runtime limits in milliseconds.
constexpr long kLimitExtraction = 1000;
constexpr long kLimitDecoupling = 1000;
constexpr long kLimitSteeringTrace = 5000;
constexpr long kLimitTermination = 30000;
constexpr long kLimitEffectiveness = 30000;
constexpr long kLimitCosine = 5000;
constexpr long kLimitMinimality = 5000;
constexpr long kLimitMutilation = 10000;
constexpr long kLimitProtocol = 10000;
constexpr long kLimitEndToEnd = 60000;

// Sample counts.
constexpr int kTerminationScripts = 500;
constexpr int kEffectivenessTables = 1000;
constexpr int kCosineSamples = 2000;
constexpr int kMinimalitySamples = 50;
constexpr int kMutilationGraphs = 200;
constexpr int kProtocolSamples = 500;

const CausalGraph& face() { return CausalGraph::celebv(); }

bool update_golden() {
  const char* v = std::getenv("CAUSAL_STEER_UPDATE_GOLDEN");
  return v && std::string(v) == "1";
}

fs::path golden(const std::string& name) { return test_support::fixtures() / "golden" / name; }

/// Compares `actual` with a golden file, or rewrites it in update mode.
void check_golden(const std::string& name, const std::string& actual, Failures& f) {
  if (update_golden()) {
    fs::create_directories(golden(name).parent_path());
    write_file_atomic(golden(name), actual);
    return;
  }
  if (!fs::exists(golden(name))) {
    f.push_back("golden file " + golden(name).string() + " is missing");
    return;
  }
  if (read_file(golden(name)) != actual) f.push_back(name + " differs from the golden fixture");
}

std::string random_case(std::string s, std::mt19937_64& rng) {
  for (auto& c : s) {
    if (rng() % 2) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = "'" CAUSAL_STEER_CLI "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// --- criteria --------------------------------------------------------------

Failures extraction_fidelity() {
  Failures f;
  struct Case {
    PromptPair pair;
    InterventionSet expected;
    std::string line;
  };
  const std::vector<Case> cases = {
      {{"This woman is young.", "This woman is old."}, {{"age", "old"}}, "old (age)"},
      {{"He is young, he has a beard.", "She is young."},
       {{"gender", "woman"}, {"beard", "absent"}},
       "woman, no-beard (gender)"},
      {{"This woman is young.", "This woman is young, she has a beard."}, {{"beard", "present"}}, "beard (beard)"},
      {{"A man is young.", "A man is young, he is bald."}, {{"bald", "present"}}, "bald (bald)"},
  };
  for (const auto& c : cases) {
    const auto got = extract_interventions(c.pair, face());
    const auto line = render_target_interventions(got, face());
    if (!(got == c.expected)) f.push_back("wrong intervention set for \"" + c.pair.counterfactual + "\"");
    if (line != c.line) f.push_back("\"" + c.pair.counterfactual + "\" rendered as \"" + line + "\"");
  }
  return f;
}

Failures decoupling_law() {
  Failures f;
  const std::string golden_sentence =
      "If either beard or bald appears in target_interventions, do not include references to age or gender.";
  const auto sentence = render_decoupling_sentence(face());
  if (sentence != golden_sentence) f.push_back("decoupling sentence is \"" + sentence + "\"");
  if (sentence.find("do not include references to age or gender") == std::string::npos) {
    f.push_back("specialized clause missing");
  }
  const std::vector<Intervention> all = {{"age", "young"}, {"gender", "woman"}, {"beard", "present"}, {"bald", "present"}};
  for (unsigned mask = 1; mask < 16; ++mask) {
    InterventionSet set;
    bool downstream = false;
    for (unsigned i = 0; i < 4; ++i) {
      if (mask & (1u << i)) {
        set.add(all[i]);
        downstream = downstream || i >= 2;
      }
    }
    const auto instr = render_evaluation_instruction("A prompt", set, face(), true);
    const bool has = instr.body.find(golden_sentence) != std::string::npos;
    if (has != downstream || instr.decoupled != downstream) {
      f.push_back("subset mask " + std::to_string(mask) + ": sentence present=" + std::to_string(has));
    }
    const auto off = render_evaluation_instruction("A prompt", set, face(), false);
    if (off.body.find(golden_sentence) != std::string::npos) {
      f.push_back("subset mask " + std::to_string(mask) + ": sentence present with decoupling off");
    }
  }
  return f;
}

Failures steering_trace() {
  Failures f;
  const auto manifest = load_manifest(test_support::fixtures() / "manifest.json");
  const auto& item = manifest.item("item-001");
  const auto& initial = *item.counterfactuals.at("age");
  TempDir dir;
  test_support::CountingPorts counting(make_mock_ports(face(), MockConfig::defaults()));
  RunContext ctx{"item-001-age", "item-001", "age", dir / "item-001-age", [] { return std::int64_t{0}; }};
  const auto result = steer(item.video, initial, {item.factual_prompt, initial}, face(), SteeringConfig{},
                            counting.ports, ctx);

  auto expect_eq = [&](const std::string& what, long got, long want) {
    if (got != want) f.push_back(what + " = " + std::to_string(got) + ", expected " + std::to_string(want));
  };
  expect_eq("edit calls", counting.editor->calls, 2);
  expect_eq("loss calls", counting.vlm->calls, 2);
  expect_eq("gradient calls", counting.llm->gradient_calls, 1);
  expect_eq("update calls", counting.llm->update_calls, 1);
  if (result.status != "approved") f.push_back("status " + result.status);
  const auto& records = result.trace.at("records");
  if (records.size() != 2) {
    f.push_back("trace has " + std::to_string(records.size()) + " records");
  } else {
    if (records[0]["prompt_in"] != "A woman is young") f.push_back("first prompt is " + records[0]["prompt_in"].dump());
    if (records[0]["prompt_out"] != "A woman in her early 20s with vibrant expression" ||
        records[1]["prompt_in"] != records[0]["prompt_out"]) {
      f.push_back("trajectory goes to " + records[0]["prompt_out"].dump());
    }
  }
  check_golden("trace_item-001-age.json", read_file(ctx.run_dir / "trace.json"), f);
  return f;
}

Failures termination() {
  Failures f;
  std::mt19937_64 rng(20240601);
  const std::vector<std::string> filler = {"the",   "image", "shows", "a",      "person", "no",    "is",
                                           "needed", "optimization", "score", "accuracy", "young", "prompt",
                                           "suggest", "improvement", "not", "return", "aligned", "**Failed**"};
  const std::vector<std::string> phrases = {"no optimization is needed", "no_optimization"};
  const std::vector<std::string> near_misses = {"no optimization needed", "no-optimization", "optimization is needed",
                                                "no optimisation is needed", "no  optimization is needed",
                                                "no_optimisation", "nooptimization", "no optimization is need",
                                                "optimization is not needed", "no_ optimization"};
  auto oracle = [&](const std::string& text) {
    const auto l = lower(text);
    return l.find(phrases[0]) != std::string::npos || l.find(phrases[1]) != std::string::npos;
  };
  auto words = [&](int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s += (i ? " " : "") + filler[rng() % filler.size()];
    return s;
  };

  TempDir dir;
  const auto clip = test_support::make_clip(dir / "source", 1, json::object());
  int early = 0;
  for (int script = 0; script < kTerminationScripts; ++script) {
    const int max_iters = 1 + static_cast<int>(rng() % 5);
    std::deque<std::string> feedback;
    for (int i = 0; i < max_iters; ++i) {
      std::string text;
      switch (rng() % 6) {
        case 0:
          text = words(3) + " \"" + random_case(phrases[rng() % 2], rng) + "\" " + words(2);
          break;
        case 1:
          text = random_case(phrases[rng() % 2], rng);
          break;
        case 2:
        case 3:
          text = words(2) + " " + random_case(near_misses[rng() % near_misses.size()], rng) + ". " + words(4);
          break;
        case 4:
          text = words(1) + " " + random_case("no optimization", rng) + " " + words(1);
          break;
        default:
          text = words(1 + static_cast<int>(rng() % 12));
      }
      feedback.push_back(text);
    }
    int expected = max_iters;
    for (int i = 0; i < max_iters; ++i) {
      if (oracle(feedback[static_cast<std::size_t>(i)])) {
        expected = i + 1;
        break;
      }
    }
    const bool expect_approved = oracle(feedback[static_cast<std::size_t>(expected - 1)]);

    auto vlm = std::make_shared<test_support::ScriptedText>(feedback, "unscripted");
    auto llm = std::make_shared<test_support::ScriptedText>(std::deque<std::string>{}, "A refined prompt");
    Ports ports{std::make_shared<test_support::IdentityEditor>(), vlm, llm, std::make_shared<MockEmbedder>()};
    SteeringConfig config;
    config.max_iters = max_iters;
    const auto id = "script-" + std::to_string(script);
    RunContext ctx{id, "item", "age", dir / id, [] { return std::int64_t{0}; }};
    const auto result = steer(clip, "A woman is young", {"This woman is old.", "A woman is young"}, face(), config,
                              ports, ctx);
    const auto n = static_cast<int>(result.state.history.size());
    const bool approved = result.status == "approved";
    if (n > max_iters) f.push_back(id + ": " + std::to_string(n) + " iterations exceed max_iters");
    if (n != expected || approved != expect_approved) {
      f.push_back(id + ": " + std::to_string(n) + " iterations (" + result.status + "), expected " +
                  std::to_string(expected));
    }
    for (int i = 0; i + 1 < n; ++i) {
      if (result.state.history[static_cast<std::size_t>(i)].loss.approved) f.push_back(id + ": approval before exit");
    }
    if (n < max_iters) ++early;
    if (f.size() > 10) break;
  }
  if (early == 0) f.push_back("no script exited early; generator is degenerate");
  return f;
}

Failures effectiveness_oracle() {
  Failures f;
  std::mt19937_64 rng(77);
  TempDir dir;
  write_file_atomic(dir / "f.png", test_support::base_png());
  const auto frame = load_frame(dir / "f.png", 0);

  std::vector<std::pair<const CausalVariable*, std::string>> targets;
  for (const auto& v : face().variables()) {
    if (v.is_presence()) {
      targets.emplace_back(&v, std::string(kPresent));
      targets.emplace_back(&v, std::string(kAbsent));
    } else {
      for (const auto& value : v.values) targets.emplace_back(&v, value);
    }
  }
  enum Category { correct, incorrect, invalid };
  auto letter = [](std::size_t i) { return std::string(1, static_cast<char>('A' + i)); };

  for (int t = 0; t < kEffectivenessTables; ++t) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<EvalItem> items;
    std::deque<std::string> replies;
    std::vector<Category> categories;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& [var, value] = targets[rng() % targets.size()];
      auto q = question_for_value(*var, value);
      const auto k = q.choices.size();
      auto cat = static_cast<Category>(rng() % 3);
      if (cat == incorrect && k < 2) cat = correct;
      std::string reply;
      if (cat == invalid) {
        const std::vector<std::string> bad = {"", "I cannot tell", "(A) or (B)", "maybe", "Z", "(Q)"};
        reply = bad[rng() % bad.size()];
      } else {
        const std::size_t choice = cat == correct ? q.correct : (q.correct + 1 + rng() % (k - 1)) % k;
        switch (rng() % 5) {
          case 0: reply = letter(choice); break;
          case 1: reply = "(" + letter(choice) + ")"; break;
          case 2: reply = "(" + lower(letter(choice)) + ") " + q.choices[choice]; break;
          case 3: reply = letter(choice) + "."; break;
          default: reply = q.choices[choice];
        }
      }
      replies.push_back(reply);
      categories.push_back(cat);
      items.push_back({std::move(q), frame, "r" + std::to_string(i)});
    }

    // Brute-force recount from the construction.
    std::map<std::string, std::pair<int, int>> expected;
    int expected_invalid = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto& [c, total] = expected[items[i].question.variable];
      ++total;
      if (categories[i] == correct) ++c;
      if (categories[i] == invalid) ++expected_invalid;
    }

    test_support::ScriptedText vlm(replies, "unscripted");
    const auto report = effectiveness(items, vlm, PromptTemplates::defaults(), 1);
    bool ok = report.per_variable.size() == expected.size() && report.invalid_answers == expected_invalid &&
              report.answers.size() == n && !report.failure;
    for (const auto& [var, ct] : expected) {
      const auto it = report.per_variable.find(var);
      if (it == report.per_variable.end() || it->second.correct != ct.first || it->second.total != ct.second ||
          it->second.accuracy() != static_cast<double>(ct.first) / ct.second) {
        ok = false;
      }
    }
    if (!ok) f.push_back("table " + std::to_string(t) + " disagrees with the recount");
    if (f.size() > 10) break;
  }
  return f;
}

Failures cosine_properties() {
  Failures f;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> comp(-10.0, 10.0);
  std::uniform_real_distribution<double> log_scale(-3.0, 3.0);
  auto random_vec = [&](std::size_t d) {
    EmbeddingVector v;
    for (std::size_t i = 0; i < d; ++i) v.components.push_back(comp(rng));
    return v;
  };
  const double analytic = cosine({{1.0, 1.0}}, {{1.0, 0.0}});
  if (std::abs(analytic - 1.0 / std::sqrt(2.0)) > kCosineTol) f.push_back("cos([1,1],[1,0]) off");
  for (int s = 0; s < kCosineSamples; ++s) {
    const std::size_t d = 1 + rng() % 512;
    const auto a = random_vec(d);
    const auto b = random_vec(d);
    const double scale = std::pow(10.0, log_scale(rng));
    EmbeddingVector scaled = a;
    for (auto& c : scaled.components) c *= scale;
    const double ab = cosine(a, b);
    if (std::abs(cosine(a, a) - 1.0) > kCosineTol) f.push_back("identity fails at sample " + std::to_string(s));
    if (ab != cosine(b, a)) f.push_back("symmetry fails at sample " + std::to_string(s));
    if (std::abs(cosine(scaled, b) - ab) > kCosineTol) f.push_back("scale invariance fails at sample " + std::to_string(s));
    if (ab < -1.0 || ab > 1.0) f.push_back("range fails at sample " + std::to_string(s));
    if (f.size() > 10) break;
  }
  return f;
}

Failures minimality_invariance() {
  Failures f;
  std::mt19937_64 rng(5);
  TempDir dir;
  MockVlm vlm(face(), MockConfig::defaults());
  MockEmbedder embedder;
  const std::map<std::string, std::vector<std::string>> context = {
      {"scene", {"park bench", "office", "beach at dusk", "kitchen", "library"}},
      {"lighting", {"overcast daylight", "warm lamp", "neon", "studio flash"}},
      {"clothing", {"red scarf", "denim jacket", "grey suit", "wool sweater"}},
      {"background", {"brick wall", "trees", "bookshelves", "city skyline"}},
  };
  auto graph_values = [&] {
    json meta = json::object();
    for (const auto& v : face().variables()) {
      const auto roll = rng() % 3;
      if (roll == 0) continue;
      meta[v.name] = v.is_presence() ? std::string(roll == 1 ? kPresent : kAbsent) : v.values[rng() % v.values.size()];
    }
    return meta;
  };
  auto frame = [&](const std::string& name, const json& meta) {
    write_file_atomic(dir / name, test_support::png_with(meta));
    return load_frame(dir / name, 0);
  };
  for (int s = 0; s < kMinimalitySamples; ++s) {
    json ctx = json::object();
    for (const auto& [key, values] : context) {
      if (rng() % 4 != 0 || ctx.empty()) ctx[key] = values[rng() % values.size()];
    }
    json a = graph_values();
    json b = graph_values();
    a.update(ctx);
    b.update(ctx);
    const auto fa = frame("a.png", a);
    const auto fb = frame("b.png", b);
    const double same = minimality(fa, fb, vlm, embedder);
    if (same != 1.0) f.push_back("sample " + std::to_string(s) + ": graph-only difference scores " + std::to_string(same));

    json c = b;
    const auto key = ctx.begin().key();
    const auto& pool = context.at(key);
    std::string replacement;
    do {
      replacement = pool[rng() % pool.size()];
    } while (replacement == ctx[key]);
    c[key] = replacement;
    const double diff = minimality(fa, frame("c.png", c), vlm, embedder);
    if (!(diff < 1.0)) f.push_back("sample " + std::to_string(s) + ": non-graph difference scores " + std::to_string(diff));
    if (f.size() > 10) break;
  }
  return f;
}

Failures mutilation_properties() {
  Failures f;
  std::mt19937_64 rng(314);
  for (int s = 0; s < kMutilationGraphs; ++s) {
    const std::size_t n = 1 + rng() % 8;
    std::vector<std::string> order;
    std::vector<CausalVariable> vars;
    for (std::size_t i = 0; i < n; ++i) {
      order.push_back("v" + std::to_string(i));
      vars.push_back(CausalVariable{order.back(), {"x" + std::to_string(i)}, {}});
    }
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (rng() % 3 == 0) edges.push_back({order[i], order[j]});
      }
    }
    const CausalGraph graph(vars, edges);
    InterventionSet set;
    std::set<std::string> intervened;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng() % 3 == 0) {
        set.add({vars[i].name, vars[i].values[0]});
        intervened.insert(vars[i].name);
      }
    }
    const auto cut = mutilate(graph, set);
    const std::set<Edge> original(graph.edges().begin(), graph.edges().end());
    std::set<Edge> kept;
    for (const auto& e : cut.edges()) {
      if (intervened.contains(e.child)) f.push_back("graph " + std::to_string(s) + ": edge into " + e.child);
      if (!original.contains(e)) f.push_back("graph " + std::to_string(s) + ": new edge " + e.parent + "->" + e.child);
      kept.insert(e);
    }
    for (const auto& e : original) {
      if (!intervened.contains(e.child) && !kept.contains(e)) {
        f.push_back("graph " + std::to_string(s) + ": dropped " + e.parent + "->" + e.child);
      }
    }
    // Kahn's algorithm over the mutilated edges.
    std::map<std::string, int> indegree;
    for (const auto& v : cut.variables()) indegree[v.name] = 0;
    for (const auto& e : cut.edges()) ++indegree[e.child];
    std::vector<std::string> ready;
    for (const auto& [v, d] : indegree) {
      if (d == 0) ready.push_back(v);
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
      const auto v = ready.back();
      ready.pop_back();
      ++visited;
      for (const auto& e : cut.edges()) {
        if (e.parent == v && --indegree[e.child] == 0) ready.push_back(e.child);
      }
    }
    if (visited != n) f.push_back("graph " + std::to_string(s) + ": cycle after mutilation");
    if (cut.variables() != graph.variables()) f.push_back("graph " + std::to_string(s) + ": variables changed");
    if (f.size() > 10) break;
  }
  return f;
}

Failures protocol_round_trip() {
  Failures f;
  std::mt19937_64 rng(2718);
  const std::vector<std::string> glyphs = {"a", "Z", " ", "\n", "\t", "\"", "\\", "{", "}", "é", "ß", "中", "😀", "0", "\x01"};
  auto text = [&] {
    std::string s;
    const auto n = rng() % 40;
    for (std::size_t i = 0; i < n; ++i) s += glyphs[rng() % glyphs.size()];
    return s;
  };
  auto bytes = [&] {
    std::string s(rng() % 300, '\0');
    for (auto& c : s) c = static_cast<char>(rng() & 0xff);
    return s;
  };
  std::uniform_real_distribution<double> real(-1e6, 1e6);

  auto rejects_extra = [&](auto parse, json j, const std::string& what) {
    j["unexpected"] = 1;
    try {
      (void)parse(j);
      f.push_back(what + " accepted an unknown field");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::parse_error) f.push_back(what + " threw " + std::string(to_string(e.code())));
    }
  };
  // Through text so the JSON writer is part of the round trip.
  auto wire = [](const json& j) { return json::parse(j.dump()); };

  for (int s = 0; s < kProtocolSamples; ++s) {
    protocol::EditRequest edit{text(), {}, text(), json::object()};
    for (auto k = rng() % 4; k > 0; --k) edit.frames.push_back(bytes());
    if (rng() % 2) edit.params = {{"guidance", real(rng)}, {"steps", static_cast<int>(rng() % 100)}};
    protocol::EditResponse edit_out{{}};
    for (auto k = rng() % 4; k > 0; --k) edit_out.frames.push_back(bytes());
    protocol::VlmRequest vlm;
    for (auto k = rng() % 5; k > 0; --k) {
      vlm.parts.push_back(rng() % 2 ? protocol::VlmPart::text(text()) : protocol::VlmPart::image(bytes()));
    }
    protocol::LlmRequest llm{text()};
    protocol::TextResponse reply{text()};
    protocol::EmbedRequest embed;
    for (auto k = rng() % 4; k > 0; --k) embed.texts.push_back(text());
    protocol::EmbedResponse vectors;
    vectors.dim = static_cast<int>(1 + rng() % 16);
    for (auto k = rng() % 4; k > 0; --k) {
      std::vector<double> v;
      for (int d = 0; d < vectors.dim; ++d) v.push_back(real(rng));
      vectors.vectors.push_back(v);
    }

    const auto id = "sample " + std::to_string(s);
    if (!(protocol::parse_edit_request(wire(protocol::to_json(edit))) == edit)) f.push_back(id + ": edit request");
    if (!(protocol::parse_edit_response(wire(protocol::to_json(edit_out))) == edit_out)) f.push_back(id + ": edit response");
    if (!(protocol::parse_vlm_request(wire(protocol::to_json(vlm))) == vlm)) f.push_back(id + ": vlm request");
    if (!(protocol::parse_llm_request(wire(protocol::to_json(llm))) == llm)) f.push_back(id + ": llm request");
    if (!(protocol::parse_text_response(wire(protocol::to_json(reply))) == reply)) f.push_back(id + ": text response");
    if (!(protocol::parse_embed_request(wire(protocol::to_json(embed))) == embed)) f.push_back(id + ": embed request");
    if (!(protocol::parse_embed_response(wire(protocol::to_json(vectors))) == vectors)) f.push_back(id + ": embed response");

    rejects_extra(protocol::parse_edit_request, protocol::to_json(edit), "edit request");
    rejects_extra(protocol::parse_edit_response, protocol::to_json(edit_out), "edit response");
    rejects_extra(protocol::parse_vlm_request, protocol::to_json(vlm), "vlm request");
    rejects_extra(protocol::parse_llm_request, protocol::to_json(llm), "llm request");
    rejects_extra(protocol::parse_text_response, protocol::to_json(reply), "text response");
    rejects_extra(protocol::parse_embed_request, protocol::to_json(embed), "embed request");
    rejects_extra(protocol::parse_embed_response, protocol::to_json(vectors), "embed response");
    if (!vlm.parts.empty()) {
      auto j = protocol::to_json(vlm);
      j["parts"][0]["unexpected"] = true;
      try {
        (void)protocol::parse_vlm_request(j);
        f.push_back(id + ": vlm part accepted an unknown field");
      } catch (const Error&) {
      }
    }
    if (f.size() > 10) break;
  }
  return f;
}

/// Attribute state of one graph variable in a frame's mock metadata.
std::string observed(const json& meta, const CausalVariable& v) {
  if (meta.contains(v.name)) return meta[v.name].get<std::string>();
  return std::string(v.is_presence() ? kAbsent : kUnspecified);
}

/// Recomputes a report's numbers from frame metadata without the mock VLM:
/// an answer is right iff the frame shows the question's target value, and
/// minimality embeds descriptions built here from the non-graph metadata.
json recompute(const fs::path& runs_dir, const Manifest& manifest) {
  const auto& graph = face();
  MockEmbedder embedder;
  std::map<std::string, std::vector<std::pair<const RunArtifacts*, std::string>>> methods;
  const auto runs = load_runs(runs_dir);
  std::set<std::string> seen;
  for (const auto& r : runs) {
    if (seen.insert(r.trace["dataset_item"].get<std::string>() + "/" + r.trace["label"].get<std::string>()).second) {
      methods["initial-prompt"].emplace_back(&r, "iter_1");
    }
    methods["vlm-steering w/ causal dec"].emplace_back(&r, r.trace["final_video"]["dir"].get<std::string>());
  }
  auto describe = [&](const json& meta) {
    std::string out;
    for (const auto& [k, v] : meta.items()) {
      if (graph.contains(k)) continue;
      out += (out.empty() ? "" : "; ") + k + ": " + (v.is_string() ? v.get<std::string>() : v.dump());
    }
    return out;
  };
  json rows = json::object();
  for (const auto& [name, members] : methods) {
    std::map<std::string, std::pair<int, int>> counts;
    double sum = 0.0;
    for (const auto& [run, video_dir] : members) {
      const auto clip = load_clip("x", run->run_dir / video_dir);
      const auto& frame = clip.frames[clip.size() / 2];
      const auto meta = frame_metadata(read_file(frame.image_ref));
      const PromptPair pair{run->trace["factual_prompt"].get<std::string>(),
                            run->trace["initial_prompt"].get<std::string>()};
      for (const auto& q : questions_for_counterfactual(pair, graph)) {
        auto& [c, t] = counts[q.variable];
        ++t;
        if (observed(meta, graph.variable(q.variable)) == q.choice_values[q.correct]) ++c;
      }
      const auto& source = manifest.item(run->trace["dataset_item"].get<std::string>()).video.frames[frame.index];
      const auto vecs = embedder.embed({{describe(frame_metadata(read_file(source.image_ref))), describe(meta)}});
      double dot = 0, na = 0, nb = 0;
      for (std::size_t i = 0; i < vecs.vectors[0].size(); ++i) {
        dot += vecs.vectors[0][i] * vecs.vectors[1][i];
        na += vecs.vectors[0][i] * vecs.vectors[0][i];
        nb += vecs.vectors[1][i] * vecs.vectors[1][i];
      }
      sum += dot / std::sqrt(na * nb);
    }
    json row = json::object();
    for (const auto& col : report_columns()) row[col] = nullptr;
    for (const auto& [var, ct] : counts) row[var] = static_cast<double>(ct.first) / ct.second;
    row["VLM-Min"] = sum / static_cast<double>(members.size());
    rows[name] = row;
  }
  return rows;
}

Failures end_to_end() {
  Failures f;
  TempDir dir;
  const auto manifest_path = test_support::fixtures() / "manifest.json";
  const auto runs = dir / "runs";
  const int steer_code = run_cli("steer --manifest '" + manifest_path.string() + "' --mock --fixed-clock --out '" +
                                     runs.string() + "'",
                                 dir / "steer.log");
  if (steer_code != 0) {
    f.push_back("steer exited " + std::to_string(steer_code) + ": " + read_file(dir / "steer.log"));
    return f;
  }
  const int eval_code = run_cli("evaluate --runs '" + runs.string() + "' --mock --out '" + (dir / "reports").string() + "'",
                                dir / "evaluate.log");
  if (eval_code != 0) {
    f.push_back("evaluate exited " + std::to_string(eval_code) + ": " + read_file(dir / "evaluate.log"));
    return f;
  }
  const auto report_text = read_file(dir / "reports" / "report.json");
  const auto report = json::parse(report_text);
  if (report["columns"] != json{"age", "gender", "beard", "bald", "VLM-Min"}) {
    f.push_back("columns are " + report["columns"].dump());
  }
  std::set<std::string> run_ids;
  for (const auto& item : {"item-001", "item-002"}) {
    for (const auto& label : intervention_labels()) run_ids.insert(std::string(item) + "-" + label);
  }
  for (const auto& id : run_ids) {
    const auto trace = json::parse(read_file(runs / id / "trace.json"));
    if (trace["status"] == "failed") f.push_back(id + " failed");
  }

  const auto expected = recompute(runs, load_manifest(manifest_path));
  if (report["methods"].size() != expected.size()) f.push_back("report has " + std::to_string(report["methods"].size()) + " methods");
  for (const auto& m : report["methods"]) {
    const auto name = m["name"].get<std::string>();
    if (!expected.contains(name)) {
      f.push_back("unexpected method " + name);
      continue;
    }
    if (m["row"] != expected[name]) f.push_back(name + " row " + m["row"].dump() + " != " + expected[name].dump());
  }
  check_golden("report.json", report_text, f);
  return f;
}

struct Criterion {
  std::string name;
  long limit_ms;
  std::function<Failures()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"intervention-extraction", kLimitExtraction, extraction_fidelity},
      {"decoupling-law", kLimitDecoupling, decoupling_law},
      {"steering-trace", kLimitSteeringTrace, steering_trace},
      {"termination", kLimitTermination, termination},
      {"effectiveness-oracle", kLimitEffectiveness, effectiveness_oracle},
      {"cosine-properties", kLimitCosine, cosine_properties},
      {"minimality-invariance", kLimitMinimality, minimality_invariance},
      {"mutilation-properties", kLimitMutilation, mutilation_properties},
      {"protocol-round-trip", kLimitProtocol, protocol_round_trip},
      {"end-to-end-mock-sweep", kLimitEndToEnd, end_to_end},
  };
  spdlog::set_level(spdlog::level::off);
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Failures failures;
    try {
      failures = c.run();
    } catch (const std::exception& e) {
      failures.push_back(std::string("exception: ") + e.what());
    }
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    if (ms >= c.limit_ms) failures.push_back("took " + std::to_string(ms) + " ms");
    const bool ok = failures.empty();
    if (!ok) ++failed;
    std::cout << (ok ? "PASS " : "FAIL ") << c.name << " (" << ms << " ms, limit " << c.limit_ms << " ms)";
    for (const auto& msg : failures) std::cout << "\n    " << msg;
    std::cout << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
