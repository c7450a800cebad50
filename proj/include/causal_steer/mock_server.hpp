#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "causal_steer/mock_services.hpp"

namespace httplib {
class Server;
}

namespace causal_steer {

/// The four mock services behind the wire protocol, on one HTTP listener.
/// Replies to a repeated Idempotency-Key are served from a cache.
class MockServer {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = 0;  ///< 0 picks a free port
    std::optional<std::string> token;  ///< required bearer token, if set
  };

  MockServer(CausalGraph graph, MockConfig config, Options options);
  MockServer(CausalGraph graph, MockConfig config);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Binds and serves on a background thread. Throws Error(port_in_use).
  void start();
  /// Serves on the calling thread until stop() (used by `mock-serve`).
  void run();
  void stop();

  [[nodiscard]] int port() const noexcept { return port_; }
  [[nodiscard]] std::string url() const;

  /// The next `count` POSTs answer 503 with the given Retry-After seconds.
  void inject_503(int count, int retry_after_s = 0);
  /// POSTs received on `path`, including rejected and cached ones.
  [[nodiscard]] int calls(const std::string& path) const;
  /// POSTs on `path` that reached a mock service.
  [[nodiscard]] int executions(const std::string& path) const;

 private:
  void bind();
  void install_routes();

  CausalGraph graph_;
  MockConfig config_;
  Options options_;
  Ports ports_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;

  mutable std::mutex mutex_;
  std::map<std::string, std::pair<int, std::string>> replies_;
  std::map<std::string, int> calls_;
  std::map<std::string, int> executions_;
  int pending_503_ = 0;
  int retry_after_s_ = 0;
};

}  // namespace causal_steer
