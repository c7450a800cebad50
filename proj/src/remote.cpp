#include "causal_steer/remote.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <spdlog/spdlog.h>

#include "causal_steer/error.hpp"
#include "causal_steer/media.hpp"

namespace causal_steer {

using nlohmann::json;

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const {
  const double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, attempt - 1);
  return std::min(max_backoff, std::chrono::milliseconds(static_cast<long long>(ms)));
}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::config_error, "service URL needs a scheme: " + url);
  }
  const auto slash = url.find('/', scheme_end + 3);
  SplitUrl out{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

bool retryable_status(int status) {
  return status == 429 || status == 500 || status == 502 || status == 503 || status == 504;
}

std::string error_message(const httplib::Result& res) {
  try {
    auto j = json::parse(res->body);
    if (j.contains("error") && j["error"].is_string()) return j["error"].get<std::string>();
  } catch (const json::exception&) {
  }
  return res->body.substr(0, 200);
}

}  // namespace

HttpTransport::HttpTransport(std::string base_url, std::optional<std::string> token, RetryPolicy policy)
    : base_url_(std::move(base_url)), token_(std::move(token)), policy_(std::move(policy)) {
  split_url(base_url_);
  if (!policy_.sleep) policy_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

json HttpTransport::post(const std::string& path, const json& body) const {
  const auto url = split_url(base_url_);
  const auto payload = body.dump();
  httplib::Headers headers{{"Idempotency-Key", sha256_hex(payload)}};

  std::string last_error;
  for (int attempt = 0; attempt <= policy_.max_retries; ++attempt) {
    // Fresh client per attempt: keeps the transport stateless and thread-safe.
    httplib::Client client(url.origin);
    client.set_connection_timeout(policy_.connect_timeout);
    client.set_read_timeout(policy_.read_timeout);
    if (token_) client.set_bearer_token_auth(*token_);

    auto res = client.Post(url.prefix + path, headers, payload, "application/json");
    std::chrono::milliseconds delay = policy_.backoff(attempt + 1);
    if (!res) {
      last_error = base_url_ + path + ": " + httplib::to_string(res.error());
    } else if (res->status == 200) {
      try {
        return json::parse(res->body);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::malformed_response, base_url_ + path + ": body is not JSON: " + e.what());
      }
    } else if (retryable_status(res->status)) {
      last_error = base_url_ + path + ": HTTP " + std::to_string(res->status) + " " + error_message(res);
      if (res->has_header("Retry-After")) {
        try {
          auto secs = std::stol(res->get_header_value("Retry-After"));
          delay = std::clamp(std::chrono::milliseconds(secs * 1000), delay, std::chrono::milliseconds(60000));
        } catch (const std::exception&) {
        }
      }
    } else {
      throw Error(ErrorCode::service_rejected,
                  base_url_ + path + ": HTTP " + std::to_string(res->status) + " " + error_message(res));
    }
    if (attempt < policy_.max_retries) {
      spdlog::warn("{} (retry {}/{} in {} ms)", last_error, attempt + 1, policy_.max_retries, delay.count());
      policy_.sleep(delay);
    }
  }
  throw Error(ErrorCode::service_unreachable, last_error);
}

bool HttpTransport::healthy() const {
  const auto url = split_url(base_url_);
  httplib::Client client(url.origin);
  client.set_connection_timeout(policy_.connect_timeout);
  client.set_read_timeout(policy_.connect_timeout);
  auto res = client.Get(url.prefix + protocol::kHealthPath);
  if (!res || res->status != 200) return false;
  try {
    return json::parse(res->body).value("status", "") == "ready";
  } catch (const json::exception&) {
    return false;
  }
}

namespace {

template <typename Parse>
auto parse_or_malformed(const json& j, Parse parse) {
  try {
    return parse(j);
  } catch (const Error& e) {
    throw Error(ErrorCode::malformed_response, e.what());
  }
}

}  // namespace

RemoteEditor::RemoteEditor(std::shared_ptr<const HttpTransport> t) : transport_(std::move(t)) {}
RemoteVlm::RemoteVlm(std::shared_ptr<const HttpTransport> t) : transport_(std::move(t)) {}
RemoteLlm::RemoteLlm(std::shared_ptr<const HttpTransport> t) : transport_(std::move(t)) {}
RemoteEmbedder::RemoteEmbedder(std::shared_ptr<const HttpTransport> t) : transport_(std::move(t)) {}

protocol::EditResponse RemoteEditor::edit(const protocol::EditRequest& request) {
  return parse_or_malformed(transport_->post(protocol::kEditPath, protocol::to_json(request)),
                            protocol::parse_edit_response);
}

protocol::TextResponse RemoteVlm::query(const protocol::VlmRequest& request) {
  return parse_or_malformed(transport_->post(protocol::kVlmPath, protocol::to_json(request)),
                            protocol::parse_text_response);
}

protocol::TextResponse RemoteLlm::complete(const protocol::LlmRequest& request) {
  return parse_or_malformed(transport_->post(protocol::kLlmPath, protocol::to_json(request)),
                            protocol::parse_text_response);
}

protocol::EmbedResponse RemoteEmbedder::embed(const protocol::EmbedRequest& request) {
  return parse_or_malformed(transport_->post(protocol::kEmbedPath, protocol::to_json(request)),
                            protocol::parse_embed_response);
}

ServiceUrls ServiceUrls::from_env() {
  ServiceUrls urls;
  std::vector<std::string> missing;
  auto read = [&](const char* name, std::string& out) {
    const char* v = std::getenv(name);
    if (v && *v) {
      out = v;
    } else {
      missing.emplace_back(name);
    }
  };
  read("CAUSAL_STEER_EDITOR_URL", urls.editor);
  read("CAUSAL_STEER_VLM_URL", urls.vlm);
  read("CAUSAL_STEER_LLM_URL", urls.llm);
  read("CAUSAL_STEER_EMBED_URL", urls.embed);
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::config_error, "service endpoints not configured (set " + names + " or use --mock)");
  }
  return urls;
}

ServiceUrls ServiceUrls::single(const std::string& url) { return {url, url, url, url}; }

std::optional<std::string> token_from_env() {
  const char* v = std::getenv("CAUSAL_STEER_TOKEN");
  if (v && *v) return std::string(v);
  return std::nullopt;
}

void RemotePorts::require_healthy() const {
  const std::pair<const char*, const HttpTransport*> all[] = {
      {"editor", editor.get()}, {"vlm", vlm.get()}, {"llm", llm.get()}, {"embed", embed.get()}};
  for (const auto& [name, t] : all) {
    if (!t->healthy()) {
      throw Error(ErrorCode::service_unreachable,
                  std::string(name) + " endpoint " + t->base_url() + " failed its health check");
    }
  }
}

RemotePorts make_remote_ports(const ServiceUrls& urls, std::optional<std::string> token,
                              const RetryPolicy& policy) {
  RemotePorts r;
  r.editor = std::make_shared<HttpTransport>(urls.editor, token, policy);
  r.vlm = std::make_shared<HttpTransport>(urls.vlm, token, policy);
  r.llm = std::make_shared<HttpTransport>(urls.llm, token, policy);
  r.embed = std::make_shared<HttpTransport>(urls.embed, token, policy);
  r.ports = Ports{std::make_shared<RemoteEditor>(r.editor), std::make_shared<RemoteVlm>(r.vlm),
                  std::make_shared<RemoteLlm>(r.llm), std::make_shared<RemoteEmbedder>(r.embed)};
  return r;
}

}  // namespace causal_steer
