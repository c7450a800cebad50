#include "causal_steer/mock_server.hpp"

#include <httplib.h>

#include <spdlog/spdlog.h>

#include "causal_steer/error.hpp"

namespace causal_steer {

using nlohmann::json;

MockServer::MockServer(CausalGraph graph, MockConfig config, Options options)
    : graph_(std::move(graph)),
      config_(std::move(config)),
      options_(std::move(options)),
      ports_(make_mock_ports(graph_, config_)),
      server_(std::make_unique<httplib::Server>()) {
  // SO_REUSEADDR only: the library default adds SO_REUSEPORT, which would let
  // a second server share an occupied port silently.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  install_routes();
}

MockServer::MockServer(CausalGraph graph, MockConfig config)
    : MockServer(std::move(graph), std::move(config), Options{}) {}

MockServer::~MockServer() { stop(); }

std::string MockServer::url() const { return "http://" + options_.host + ":" + std::to_string(port_); }

void MockServer::bind() {
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
    if (port_ < 0) throw Error(ErrorCode::port_in_use, "could not bind " + options_.host);
  } else {
    if (!server_->bind_to_port(options_.host, options_.port)) {
      throw Error(ErrorCode::port_in_use, options_.host + ":" + std::to_string(options_.port) + " is in use");
    }
    port_ = options_.port;
  }
}

void MockServer::start() {
  bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void MockServer::run() {
  bind();
  spdlog::info("mock services listening on {}", url());
  server_->listen_after_bind();
}

void MockServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void MockServer::inject_503(int count, int retry_after_s) {
  std::lock_guard lock(mutex_);
  pending_503_ = count;
  retry_after_s_ = retry_after_s;
}

int MockServer::calls(const std::string& path) const {
  std::lock_guard lock(mutex_);
  auto it = calls_.find(path);
  return it == calls_.end() ? 0 : it->second;
}

int MockServer::executions(const std::string& path) const {
  std::lock_guard lock(mutex_);
  auto it = executions_.find(path);
  return it == executions_.end() ? 0 : it->second;
}

void MockServer::install_routes() {
  auto reply = [](httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, "application/json");
  };
  auto error_body = [](const std::string& message) { return json{{"error", message}}.dump(); };

  // Wraps one endpoint: auth, fault injection, idempotency cache, error mapping.
  auto endpoint = [this, reply, error_body](const std::string& path,
                                            std::function<json(const json&)> handle) {
    server_->Post(path, [this, path, handle, reply, error_body](const httplib::Request& req,
                                                                httplib::Response& res) {
      std::string key = req.get_header_value("Idempotency-Key");
      {
        std::lock_guard lock(mutex_);
        ++calls_[path];
        if (pending_503_ > 0) {
          --pending_503_;
          res.set_header("Retry-After", std::to_string(retry_after_s_));
          reply(res, 503, error_body("injected fault"));
          return;
        }
      }
      if (options_.token && req.get_header_value("Authorization") != "Bearer " + *options_.token) {
        reply(res, 401, error_body("missing or invalid bearer token"));
        return;
      }
      if (!key.empty()) {
        key = path + "|" + key;
        std::lock_guard lock(mutex_);
        if (auto it = replies_.find(key); it != replies_.end()) {
          reply(res, it->second.first, it->second.second);
          return;
        }
      }
      int status = 200;
      std::string body;
      try {
        body = handle(json::parse(req.body)).dump();
        std::lock_guard lock(mutex_);
        ++executions_[path];
      } catch (const json::exception& e) {
        status = 400;
        body = error_body(std::string("invalid JSON: ") + e.what());
      } catch (const Error& e) {
        status = e.code() == ErrorCode::parse_error || e.code() == ErrorCode::service_rejected ? 400 : 500;
        body = error_body(e.what());
      }
      if (!key.empty()) {
        std::lock_guard lock(mutex_);
        replies_.emplace(key, std::make_pair(status, body));
      }
      reply(res, status, body);
    });
  };

  endpoint(protocol::kEditPath, [this](const json& j) {
    return protocol::to_json(ports_.editor->edit(protocol::parse_edit_request(j)));
  });
  endpoint(protocol::kVlmPath, [this](const json& j) {
    return protocol::to_json(ports_.vlm->query(protocol::parse_vlm_request(j)));
  });
  endpoint(protocol::kLlmPath, [this](const json& j) {
    return protocol::to_json(ports_.llm->complete(protocol::parse_llm_request(j)));
  });
  endpoint(protocol::kEmbedPath, [this](const json& j) {
    return protocol::to_json(ports_.embedder->embed(protocol::parse_embed_request(j)));
  });
  server_->Get(protocol::kHealthPath, [reply](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, json{{"status", "ready"}}.dump());
  });
}

}  // namespace causal_steer
