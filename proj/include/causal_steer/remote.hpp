#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "causal_steer/ports.hpp"

namespace causal_steer {

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{5000};
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{120000};
  /// Replaced in tests to avoid real sleeping.
  std::function<void(std::chrono::milliseconds)> sleep;

  /// Delay before retry number `attempt` (1-based), ignoring Retry-After.
  [[nodiscard]] std::chrono::milliseconds backoff(int attempt) const;
};

/// JSON-over-HTTP with bounded retries. Every POST carries an Idempotency-Key
/// (SHA-256 of the body), so a retried edit is recognisable server-side.
/// Connection failures and 429/5xx are retried and end as
/// Error(service_unreachable); other 4xx map to Error(service_rejected).
class HttpTransport {
 public:
  HttpTransport(std::string base_url, std::optional<std::string> token = std::nullopt,
                RetryPolicy policy = {});

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;
  /// GET /healthz answered 200 with {"status":"ready"}.
  [[nodiscard]] bool healthy() const;

  [[nodiscard]] const std::string& base_url() const noexcept { return base_url_; }

 private:
  std::string base_url_;
  std::optional<std::string> token_;
  RetryPolicy policy_;
};

class RemoteEditor final : public VideoEditorPort {
 public:
  explicit RemoteEditor(std::shared_ptr<const HttpTransport> transport);
  protocol::EditResponse edit(const protocol::EditRequest& request) override;

 private:
  std::shared_ptr<const HttpTransport> transport_;
};

class RemoteVlm final : public VlmPort {
 public:
  explicit RemoteVlm(std::shared_ptr<const HttpTransport> transport);
  protocol::TextResponse query(const protocol::VlmRequest& request) override;

 private:
  std::shared_ptr<const HttpTransport> transport_;
};

class RemoteLlm final : public LlmPort {
 public:
  explicit RemoteLlm(std::shared_ptr<const HttpTransport> transport);
  protocol::TextResponse complete(const protocol::LlmRequest& request) override;

 private:
  std::shared_ptr<const HttpTransport> transport_;
};

class RemoteEmbedder final : public EmbedderPort {
 public:
  explicit RemoteEmbedder(std::shared_ptr<const HttpTransport> transport);
  protocol::EmbedResponse embed(const protocol::EmbedRequest& request) override;

 private:
  std::shared_ptr<const HttpTransport> transport_;
};

struct ServiceUrls {
  std::string editor;
  std::string vlm;
  std::string llm;
  std::string embed;

  /// Reads CAUSAL_STEER_{EDITOR,VLM,LLM,EMBED}_URL. Throws Error(config_error)
  /// naming every unset variable.
  static ServiceUrls from_env();
  static ServiceUrls single(const std::string& url);
};

/// Token from CAUSAL_STEER_TOKEN, if set and non-empty.
std::optional<std::string> token_from_env();

struct RemotePorts {
  Ports ports;
  std::shared_ptr<const HttpTransport> editor, vlm, llm, embed;

  /// Throws Error(service_unreachable) naming the first endpoint whose
  /// health check fails.
  void require_healthy() const;
};

RemotePorts make_remote_ports(const ServiceUrls& urls, std::optional<std::string> token,
                              const RetryPolicy& policy = {});

}  // namespace causal_steer
