#include "causal_steer/commands.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "causal_steer/conformance.hpp"
#include "causal_steer/dataset.hpp"
#include "causal_steer/evaluation.hpp"
#include "causal_steer/mock_server.hpp"
#include "causal_steer/remote.hpp"
#include "causal_steer/steering.hpp"
#include "causal_steer/text.hpp"

namespace causal_steer {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::config_error:
    case ErrorCode::parse_error:
    case ErrorCode::missing_frame:
    case ErrorCode::duplicate_id:
    case ErrorCode::empty_manifest:
    case ErrorCode::invalid_graph:
    case ErrorCode::ambiguous_attribute:
      return kExitConfigError;
    default:
      return kExitRunFailure;
  }
}

namespace {

/// Remote ports plus, under --mock, the loopback server behind them.
struct ServiceStack {
  std::unique_ptr<MockServer> server;
  RemotePorts remote;
};

ServiceStack connect(bool mock, std::uint64_t seed, const CausalGraph& graph) {
  ServiceStack stack;
  const auto token = token_from_env();
  ServiceUrls urls;
  if (mock) {
    MockServer::Options o;
    o.token = token;
    stack.server = std::make_unique<MockServer>(graph, MockConfig::defaults(seed), o);
    stack.server->start();
    spdlog::info("mock services on {}", stack.server->url());
    urls = ServiceUrls::single(stack.server->url());
  } else {
    urls = ServiceUrls::from_env();
  }
  stack.remote = make_remote_ports(urls, token);
  stack.remote.require_healthy();
  return stack;
}

PromptTemplates load_templates(const std::optional<fs::path>& dir) {
  return dir ? PromptTemplates::with_overrides(*dir) : PromptTemplates::defaults();
}

}  // namespace

int cmd_steer(const SteerOptions& o) {
  const auto& valid = intervention_labels();
  for (const auto& l : o.labels) {
    if (std::find(valid.begin(), valid.end(), l) == valid.end()) {
      throw Error(ErrorCode::config_error,
                  "unknown intervention label '" + l + "'; valid labels: " + text::join(valid, ", "));
    }
  }
  if (o.max_iters < 1) throw Error(ErrorCode::config_error, "--max-iters must be at least 1");
  if (o.jobs < 1) throw Error(ErrorCode::config_error, "--jobs must be at least 1");

  SteeringConfig config;
  config.max_iters = o.max_iters;
  config.selector = FrameSelector::parse(o.frame_selector);
  config.render_final = o.render_final;
  config.causal_decoupling = o.causal_decoupling;
  const auto templates = load_templates(o.templates_dir);

  const auto manifest = load_manifest(o.manifest);
  const auto graph = manifest.graph();
  std::vector<const DatasetItem*> items;
  const bool all = std::find(o.items.begin(), o.items.end(), "all") != o.items.end();
  if (all) {
    for (const auto& i : manifest.items) items.push_back(&i);
  } else {
    for (const auto& id : o.items) items.push_back(&manifest.item(id));
  }

  struct Job {
    const DatasetItem* item;
    std::string label;
    std::string prompt;
  };
  std::vector<Job> jobs;
  for (const auto* item : items) {
    for (const auto& label : o.labels) {
      const auto& cf = item->counterfactuals.at(label);
      if (!cf) {
        spdlog::info("[{}] no {} counterfactual, skipping", item->id, label);
        continue;
      }
      jobs.push_back({item, label, *cf});
    }
  }
  if (jobs.empty()) throw Error(ErrorCode::config_error, "nothing to run for the selected items and labels");

  auto stack = connect(o.mock, o.seed, graph);  // health check before any run starts
  fs::create_directories(o.out);

  std::vector<std::string> status(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      RunContext ctx;
      ctx.run_id = job.item->id + "-" + job.label;
      ctx.dataset_item = job.item->id;
      ctx.label = job.label;
      ctx.run_dir = o.out / ctx.run_id;
      if (o.fixed_clock) ctx.clock = [] { return std::int64_t{0}; };
      try {
        auto r = steer(job.item->video, job.prompt, {job.item->factual_prompt, job.prompt}, graph, config,
                       stack.remote.ports, ctx, templates);
        status[i] = r.status;
        spdlog::info("[{}] {} after {} iteration(s)", ctx.run_id, r.status, r.state.history.size());
      } catch (const Error& e) {
        status[i] = "failed";
        if (e.code() == ErrorCode::empty_interventions) spdlog::error("[{}] {}", ctx.run_id, e.what());
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min<int>(o.jobs, static_cast<int>(jobs.size())); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  json runs = json::array();
  bool failed = false;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    runs.push_back({{"run_id", jobs[i].item->id + "-" + jobs[i].label}, {"status", status[i]}});
    failed = failed || status[i] == "failed";
  }
  write_file_atomic(o.out / "sweep.json",
                    json{{"manifest", fs::absolute(o.manifest).lexically_normal().string()}, {"runs", runs}}.dump(2) +
                        "\n");
  return failed ? kExitRunFailure : kExitOk;
}

int cmd_evaluate(const EvaluateOptions& o) {
  if (o.format != "json" && o.format != "table") {
    throw Error(ErrorCode::config_error, "--format must be json or table");
  }
  if (o.runs.empty()) throw Error(ErrorCode::config_error, "--runs is required");
  std::vector<RunArtifacts> runs;
  for (const auto& dir : o.runs) {
    auto more = load_runs(dir);
    std::move(more.begin(), more.end(), std::back_inserter(runs));
  }
  fs::path manifest_path;
  if (o.manifest) {
    manifest_path = *o.manifest;
  } else {
    const auto sweep = o.runs.front() / "sweep.json";
    if (!fs::is_regular_file(sweep)) {
      throw Error(ErrorCode::missing_artifacts, sweep.string() + " not found; pass --manifest");
    }
    manifest_path = json::parse(read_file(sweep)).at("manifest").get<std::string>();
  }
  const auto manifest = load_manifest(manifest_path);
  const auto templates = load_templates(o.templates_dir);
  auto stack = connect(o.mock, o.seed, manifest.graph());

  ReportOptions ro;
  ro.jobs = o.jobs;
  ro.templates = &templates;
  const auto report = aggregate_report(runs, manifest, stack.remote.ports, ro);
  fs::create_directories(o.out);
  write_file_atomic(o.out / (o.name + ".json"), report.dump(2) + "\n");
  spdlog::info("wrote {}", (o.out / (o.name + ".json")).string());
  if (o.format == "table") {
    const auto table = render_table(report);
    write_file_atomic(o.out / (o.name + ".txt"), table);
    std::cout << table;
  }
  return kExitOk;
}

int cmd_mock_serve(const MockServeOptions& o) {
  auto config = MockConfig::defaults(o.seed);
  if (o.verdict == "never") {
    config.verdict = MockConfig::Verdict::never;
  } else if (o.verdict == "always") {
    config.verdict = MockConfig::Verdict::always;
  } else if (o.verdict != "auto") {
    throw Error(ErrorCode::config_error, "--verdict must be auto, never or always");
  }
  MockServer::Options so;
  so.host = o.host;
  so.port = o.port;
  so.token = token_from_env();
  MockServer server(CausalGraph::celebv(), config, so);
  server.run();
  return kExitOk;
}

int cmd_ingest(const IngestOptions& o) {
  const auto clip = ingest_frames(o.src, o.out, o.resize, o.take);
  spdlog::info("wrote {} frames to {}", clip.size(), o.out.string());
  return kExitOk;
}

int cmd_conformance(const ConformanceOptions& o) {
  std::unique_ptr<MockServer> server;
  std::string url;
  if (o.mock) {
    server = std::make_unique<MockServer>(CausalGraph::celebv(), MockConfig::defaults());
    server->start();
    url = server->url();
  } else if (o.url) {
    url = *o.url;
  } else {
    throw Error(ErrorCode::config_error, "conformance needs --url or --mock");
  }
  const auto results = run_conformance(url, o.golden_dir, o.mock ? std::nullopt : token_from_env());
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitRunFailure;
}

}  // namespace causal_steer
