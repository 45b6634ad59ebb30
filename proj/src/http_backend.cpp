#include "regcov/judge.hpp"

#include <httplib.h>

#include <cstdlib>

namespace regcov::judge {

namespace {

using nlohmann::json;

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& endpoint) {
  std::size_t scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw Error("endpoint must be a full URL (scheme://host[:port]/path): " + endpoint);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (endpoint.rfind("https://", 0) == 0)
    throw Error("https endpoints require an SSL-enabled build");
#endif
  std::size_t path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

HttpBackend::HttpBackend(const std::string& endpoint, const std::string& model_id,
                         const std::string& api_key, int timeout_ms)
    : model_id_(model_id), api_key_(api_key), timeout_ms_(timeout_ms) {
  SplitUrl url = split_url(endpoint);
  base_ = url.base;
  path_ = url.path;
}

std::string HttpBackend::complete(const std::string& prompt) {
  json body;
  body["model"] = model_id_;
  body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  if (extra_params_.is_object()) {
    for (const auto& [key, value] : extra_params_.items()) body[key] = value;
  }

  // One client per request keeps this trivially safe under the batch
  // concurrency contract.
  httplib::Client client(base_);
  client.set_connection_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
  client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
  client.set_write_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    JudgeErrorKind kind = res.error() == httplib::Error::ConnectionTimeout
                              ? JudgeErrorKind::Timeout
                              : JudgeErrorKind::Transport;
    throw BackendError(kind, "request failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 429)
    throw BackendError(JudgeErrorKind::RateLimited, "HTTP 429: rate limited");
  if (res->status < 200 || res->status >= 300)
    throw BackendError(JudgeErrorKind::Transport,
                       "HTTP " + std::to_string(res->status) + ": " + res->body);

  json doc = json::parse(res->body, nullptr, false);
  if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() ||
      doc["choices"].empty())
    throw MalformedResponseError("completion response has no choices");
  const json& first = doc["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string())
    throw MalformedResponseError("completion choice has no message content");
  return first["message"]["content"].get<std::string>();
}

std::unique_ptr<Backend> make_http_backend(const JudgeConfig& config) {
  if (config.endpoint.empty()) throw Error("judge config: endpoint must be set");
  const char* key = std::getenv("REGCOV_API_KEY");
  if (key == nullptr || *key == '\0')
    throw Error("REGCOV_API_KEY is not set; required for a live judge backend");
  auto backend = std::make_unique<HttpBackend>(config.endpoint, config.model_id, key,
                                               config.request_timeout_ms);
  if (config.extra_params.is_object()) backend->set_extra_params(config.extra_params);
  return backend;
}

}  // namespace regcov::judge
