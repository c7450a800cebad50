#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace causal_steer {

// Golden-request conformance suite for editor endpoints. Each case file is
// {"name", "path", "request", "expect": {"status", "frames_equal_request"?}};
// the request body is sent verbatim, so malformed requests can be exercised.

struct ConformanceCase {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<ConformanceCase> run_conformance(const std::string& base_url,
                                             const std::filesystem::path& golden_dir,
                                             const std::optional<std::string>& token = std::nullopt);

}  // namespace causal_steer
