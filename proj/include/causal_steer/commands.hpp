#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "causal_steer/error.hpp"

namespace causal_steer {

// Subcommand bodies behind the causal-steer executable. Each returns the
// process exit status: 0 success, 1 run failure or unreachable service,
// 2 configuration error.

inline constexpr int kExitOk = 0;
inline constexpr int kExitRunFailure = 1;
inline constexpr int kExitConfigError = 2;

/// Exit status for an error that escaped a subcommand.
int exit_code_for(ErrorCode code) noexcept;

struct SteerOptions {
  std::filesystem::path manifest;
  std::vector<std::string> items = {"all"};
  std::vector<std::string> labels = {"age", "gender", "beard", "bald"};
  int max_iters = 2;
  std::string frame_selector = "middle";
  bool render_final = false;
  bool causal_decoupling = true;
  bool mock = false;
  std::uint64_t seed = 0;
  std::filesystem::path out = "runs";
  int jobs = 1;
  std::optional<std::filesystem::path> templates_dir;
  /// Trace clock; a fixed clock makes traces byte-reproducible.
  bool fixed_clock = false;
};

struct EvaluateOptions {
  std::vector<std::filesystem::path> runs;
  std::optional<std::filesystem::path> manifest;
  std::filesystem::path out = "reports";
  std::string name = "report";
  std::string format = "json";
  bool mock = false;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::optional<std::filesystem::path> templates_dir;
};

struct MockServeOptions {
  std::uint64_t seed = 0;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string verdict = "auto";
};

struct IngestOptions {
  std::filesystem::path src;
  std::filesystem::path out;
  int resize = 512;
  std::size_t take = 24;
};

struct ConformanceOptions {
  std::optional<std::string> url;
  std::filesystem::path golden_dir;
  /// Run against an in-process mock server instead of `url`.
  bool mock = false;
};

int cmd_steer(const SteerOptions& options);
int cmd_evaluate(const EvaluateOptions& options);
int cmd_mock_serve(const MockServeOptions& options);
int cmd_ingest(const IngestOptions& options);
int cmd_conformance(const ConformanceOptions& options);

}  // namespace causal_steer
