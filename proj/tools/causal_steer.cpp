#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "causal_steer/commands.hpp"
#include "causal_steer/evaluation.hpp"

using namespace causal_steer;

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("causal-steer"));
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");

  CLI::App app{"Steer a black-box video editor toward counterfactual edits with VLM feedback"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  SteerOptions steer;
  auto* s = app.add_subcommand("steer", "Run the refinement loop for dataset items");
  s->add_option("--manifest", steer.manifest, "Dataset manifest")->required();
  s->add_option("--items", steer.items, "Item ids, or 'all'")->delimiter(',');
  s->add_option("--labels", steer.labels, "Intervention labels (age, gender, beard, bald)")->delimiter(',');
  s->add_option("--max-iters", steer.max_iters, "Loop iterations per run")->capture_default_str();
  s->add_option("--frame-selector", steer.frame_selector, "first, middle or a frame index")->capture_default_str();
  s->add_flag("--render-final", steer.render_final, "On exhaustion, edit once more with the last prompt");
  s->add_flag("!--no-causal-decoupling", steer.causal_decoupling, "Omit the decoupling sentence");
  s->add_flag("--mock", steer.mock, "Serve deterministic mocks on loopback");
  s->add_option("--seed", steer.seed, "Mock seed")->capture_default_str();
  s->add_option("--out", steer.out, "Run output directory")->capture_default_str();
  s->add_option("--jobs", steer.jobs, "Concurrent runs")->capture_default_str();
  s->add_option("--templates-dir", steer.templates_dir, "Template override directory");
  s->add_flag("--fixed-clock", steer.fixed_clock, "Record zero wall times (reproducible traces)");

  EvaluateOptions eval;
  auto* e = app.add_subcommand("evaluate", "Effectiveness and minimality report over run directories");
  e->add_option("--runs", eval.runs, "Run directories")->required();
  e->add_option("--manifest", eval.manifest, "Dataset manifest (default: from <runs>/sweep.json)");
  e->add_option("--out", eval.out, "Report directory")->capture_default_str();
  e->add_option("--name", eval.name, "Report name")->capture_default_str();
  e->add_option("--format", eval.format, "json or table")->capture_default_str();
  e->add_flag("--mock", eval.mock, "Serve deterministic mocks on loopback");
  e->add_option("--seed", eval.seed, "Mock seed")->capture_default_str();
  e->add_option("--jobs", eval.jobs, "Concurrent VLM requests")->capture_default_str();
  e->add_option("--templates-dir", eval.templates_dir, "Template override directory");

  MockServeOptions serve;
  auto* m = app.add_subcommand("mock-serve", "Serve the mock editor, VLM, LLM and embedder over HTTP");
  m->add_option("--seed", serve.seed)->capture_default_str();
  m->add_option("--host", serve.host)->capture_default_str();
  m->add_option("--port", serve.port, "0 picks a free port")->capture_default_str();
  m->add_option("--verdict", serve.verdict, "auto, never or always")->capture_default_str();

  IngestOptions ingest;
  auto* i = app.add_subcommand("ingest", "Take and resize the first frames of a directory");
  i->add_option("--src", ingest.src)->required();
  i->add_option("--out", ingest.out)->required();
  i->add_option("--resize", ingest.resize)->capture_default_str();
  i->add_option("--take", ingest.take)->capture_default_str();

  ConformanceOptions conf;
  auto* c = app.add_subcommand("conformance", "Replay golden editor requests against an endpoint");
  c->add_option("--url", conf.url);
  c->add_option("--golden", conf.golden_dir)->required();
  c->add_flag("--mock", conf.mock, "Test an in-process mock server");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kExitOk : kExitConfigError;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    if (*s) return cmd_steer(steer);
    if (*e) return cmd_evaluate(eval);
    if (*m) return cmd_mock_serve(serve);
    if (*i) return cmd_ingest(ingest);
    if (*c) return cmd_conformance(conf);
  } catch (const Error& err) {
    spdlog::error("{}: {}", to_string(err.code()), err.what());
    return exit_code_for(err.code());
  } catch (const std::exception& err) {
    spdlog::error("{}", err.what());
    return kExitRunFailure;
  }
  return kExitOk;
}
