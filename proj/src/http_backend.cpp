// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <regex>

#include "httplib.h"
#include "visynth/backends.hpp"
#include "visynth/image.hpp"

namespace visynth {
namespace {

using nlohmann::json;

bool transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

void validate(const BackendConfig& config) {
  if (config.endpoint.empty()) throw Error(ErrorCode::ConfigInvalid, "backend endpoint is empty");
  if (config.timeout.count() <= 0) throw Error(ErrorCode::ConfigInvalid, "backend timeout must be > 0");
  if (config.max_retries < 0) throw Error(ErrorCode::ConfigInvalid, "max_retries must be >= 0");
  if (config.max_new_tokens < 1) throw Error(ErrorCode::ConfigInvalid, "max_new_tokens must be >= 1");
}

void from_json(const json& j, BackendConfig& c) {
  c.endpoint = j.value("endpoint", std::string{});
  c.model_name = j.value("model", j.value("model_name", std::string{}));
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", 120000));
  c.max_retries = j.value("max_retries", 3);
  c.backoff_base = std::chrono::milliseconds(j.value("backoff_base_ms", 500));
  if (j.contains("auth_token") && j["auth_token"].is_string()) c.auth_token = j["auth_token"].get<std::string>();
  c.max_new_tokens = j.value("max_new_tokens", 1024);
  c.temperature = j.value("temperature", 0.0);
}

BackendConfig apply_environment(BackendConfig config) {
  if (const char* endpoint = std::getenv("VISYNTH_ENDPOINT"); endpoint && *endpoint) config.endpoint = endpoint;
  if (const char* key = std::getenv("VISYNTH_API_KEY"); key && *key) config.auth_token = key;
  return config;
}

json to_wire(const ChatRequest& request, const std::string& model, const std::filesystem::path& image_base_dir) {
  validate(request);
  json messages = json::array();
  for (const auto& m : request.messages) {
    json content = json::array();
    if (m.image) {
      const auto payload = materialize(*m.image, image_base_dir);
      content.push_back({{"type", "image_url"}, {"image_url", {{"url", payload.data_url()}}}});
    }
    content.push_back({{"type", "text"}, {"text", m.text}});
    const char* role = m.role == MessageRole::System ? "system" : m.role == MessageRole::User ? "user" : "assistant";
    messages.push_back({{"role", role}, {"content", content}});
  }
  json body = {{"model", model},
               {"messages", messages},
               {"max_tokens", request.max_new_tokens},
               {"temperature", request.temperature}};
  if (!request.stop.empty()) body["stop"] = request.stop;
  return body;
}

std::string parse_wire_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    throw BackendError(ErrorCode::MalformedResponse, "response body is not JSON", false);
  }
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    // Some servers return content parts.
    std::string out;
    for (const auto& part : content) {
      if (part.value("type", std::string{}) == "text") out += part.value("text", std::string{});
    }
    return out;
  } catch (const json::exception&) {
    throw BackendError(ErrorCode::MalformedResponse, "response lacks choices[0].message.content", false);
  }
}

OpenAiChatBackend::OpenAiChatBackend(BackendConfig config) : config_(std::move(config)) {
  validate(config_);
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url))
    throw Error(ErrorCode::ConfigInvalid, config_.endpoint, "endpoint is not an http(s) URL: " + config_.endpoint);
  scheme_host_port_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
}

std::string OpenAiChatBackend::complete(const ChatRequest& request) {
  const auto body = to_wire(request, config_.model_name, config_.image_base_dir).dump();

  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (config_.auth_token) headers.emplace("Authorization", "Bearer " + *config_.auth_token);

  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
      throw BackendError(ErrorCode::Timeout, "request timed out: " + httplib::to_string(err), true);
    throw BackendError(ErrorCode::ConnectionFailed, "connection failed: " + httplib::to_string(err), true);
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(ErrorCode::HttpStatus, "HTTP status " + std::to_string(res->status),
                       transient_status(res->status), res->status);
  }
  return parse_wire_response(res->body);
}

std::shared_ptr<ChatBackend> make_http_backend(const BackendConfig& config) {
  RetryPolicy policy;
  policy.max_retries = config.max_retries;
  policy.backoff_base = config.backoff_base;
  return std::make_shared<RetryingBackend>(std::make_shared<OpenAiChatBackend>(config), policy);
}

std::string complete(const ChatRequest& request, const BackendConfig& config) {
  return make_http_backend(config)->complete(request);
}

}  // namespace visynth
