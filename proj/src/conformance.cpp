#include "causal_steer/conformance.hpp"

#include <httplib.h>

#include <algorithm>

#include <nlohmann/json.hpp>

#include "causal_steer/error.hpp"
#include "causal_steer/media.hpp"
#include "causal_steer/protocol.hpp"

namespace causal_steer {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<ConformanceCase> run_conformance(const std::string& base_url, const fs::path& golden_dir,
                                             const std::optional<std::string>& token) {
  if (!fs::is_directory(golden_dir)) {
    throw Error(ErrorCode::config_error, "conformance directory " + golden_dir.string() + " does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(golden_dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::config_error, "no conformance cases in " + golden_dir.string());

  httplib::Client client(base_url);
  client.set_read_timeout(std::chrono::seconds(60));
  if (token) client.set_bearer_token_auth(*token);

  std::vector<ConformanceCase> results;
  {
    ConformanceCase health{"healthz", false, ""};
    auto res = client.Get(protocol::kHealthPath);
    if (!res) {
      health.detail = httplib::to_string(res.error());
    } else {
      health.passed = res->status == 200 && json::parse(res->body, nullptr, false).value("status", "") == "ready";
      health.detail = "HTTP " + std::to_string(res->status);
    }
    results.push_back(health);
  }

  for (const auto& file : files) {
    const auto spec = json::parse(read_file(file));
    ConformanceCase c{spec.at("name").get<std::string>(), false, ""};
    const auto& request = spec.at("request");
    const auto& expect = spec.at("expect");
    auto res = client.Post(spec.at("path").get<std::string>(), request.dump(), "application/json");
    if (!res) {
      c.detail = httplib::to_string(res.error());
      results.push_back(c);
      continue;
    }
    const int want = expect.at("status").get<int>();
    if (res->status != want) {
      c.detail = "expected HTTP " + std::to_string(want) + ", got " + std::to_string(res->status);
      results.push_back(c);
      continue;
    }
    c.passed = true;
    c.detail = "HTTP " + std::to_string(res->status);
    if (expect.value("frames_equal_request", false)) {
      try {
        const auto in = protocol::parse_edit_request(request);
        const auto out = protocol::parse_edit_response(json::parse(res->body));
        if (out.frames.size() != in.frames.size()) {
          c.passed = false;
          c.detail = "frame count changed";
        } else {
          for (std::size_t i = 0; i < in.frames.size(); ++i) {
            if (sha256_hex(in.frames[i]) != sha256_hex(out.frames[i])) {
              c.passed = false;
              c.detail = "frame " + std::to_string(i) + " hash differs";
              break;
            }
          }
        }
      } catch (const std::exception& e) {
        c.passed = false;
        c.detail = std::string("bad response: ") + e.what();
      }
    }
    results.push_back(c);
  }
  return results;
}

}  // namespace causal_steer
