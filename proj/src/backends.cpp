// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "visynth/backends.hpp"

#include <algorithm>
#include <thread>

#include "visynth/text.hpp"

namespace visynth {
namespace {

using nlohmann::json;

std::string_view role_name(MessageRole r) {
  switch (r) {
    case MessageRole::System: return "system";
    case MessageRole::User: return "user";
    case MessageRole::Assistant: return "assistant";
  }
  return "user";
}

MessageRole role_from_name(const std::string& s) {
  if (s == "system") return MessageRole::System;
  if (s == "user") return MessageRole::User;
  if (s == "assistant") return MessageRole::Assistant;
  throw Error(ErrorCode::RecordInvalid, "unknown message role '" + s + "'");
}

ErrorCode failure_code(const std::string& kind) {
  if (kind == "timeout") return ErrorCode::Timeout;
  if (kind == "http") return ErrorCode::HttpStatus;
  if (kind == "malformed") return ErrorCode::MalformedResponse;
  if (kind == "connection") return ErrorCode::ConnectionFailed;
  throw Error(ErrorCode::ConfigInvalid, "unknown failure kind '" + kind + "'");
}

RequestMatcher matcher_from_json(const json& m) {
  if (m.is_string() && m.get<std::string>() == "any") return match_any();
  if (!m.is_object()) throw Error(ErrorCode::ConfigInvalid, "mock rule 'match' must be an object or \"any\"");
  if (m.contains("substring")) return match_substring(m["substring"].get<std::string>());
  if (m.contains("last_message")) return match_last_message(m["last_message"].get<std::string>());
  if (m.contains("request_hash"))
    return match_request_hash(std::stoull(m["request_hash"].get<std::string>(), nullptr, 16));
  if (m.value("any", false)) return match_any();
  throw Error(ErrorCode::ConfigInvalid, "mock rule has no recognised matcher");
}

}  // namespace

void validate(const ChatRequest& request) {
  if (request.messages.empty()) throw Error(ErrorCode::InvalidArgument, "chat request has no messages");
  if (request.max_new_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_new_tokens must be >= 1");
  if (request.temperature < 0) throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
  for (const auto& m : request.messages) {
    if (m.image && m.role != MessageRole::User)
      throw Error(ErrorCode::InvalidArgument, "images are only allowed on user messages");
  }
}

void to_json(json& j, const ChatMessage& m) {
  j = {{"role", role_name(m.role)}, {"text", m.text}};
  if (m.image) j["image"] = *m.image;
}

void from_json(const json& j, ChatMessage& m) {
  m.role = role_from_name(j.at("role").get<std::string>());
  m.text = j.at("text").get<std::string>();
  m.image.reset();
  if (j.contains("image") && !j["image"].is_null()) m.image = j["image"].get<ImageRef>();
}

void to_json(json& j, const ChatRequest& r) {
  j = {{"messages", r.messages},
       {"max_new_tokens", r.max_new_tokens},
       {"temperature", r.temperature},
       {"stop", r.stop}};
}

void from_json(const json& j, ChatRequest& r) {
  r.messages = j.at("messages").get<std::vector<ChatMessage>>();
  r.max_new_tokens = j.value("max_new_tokens", 512);
  r.temperature = j.value("temperature", 0.0);
  r.stop = j.value("stop", std::vector<std::string>{});
}

std::uint64_t request_hash(const ChatRequest& request) {
  return text::fnv1a64(json(request.messages).dump());
}

// ---------------------------------------------------------------------------

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry) {
  auto delay = policy.backoff_base;
  for (int i = 0; i < retry && delay < policy.backoff_cap; ++i) delay *= 2;
  return std::min(delay, policy.backoff_cap);
}

RetryingBackend::RetryingBackend(std::shared_ptr<ChatBackend> inner, RetryPolicy policy, Sleeper sleeper)
    : inner_(std::move(inner)), policy_(policy), sleeper_(std::move(sleeper)) {
  if (policy_.max_retries < 0) throw Error(ErrorCode::InvalidArgument, "max_retries must be >= 0");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string RetryingBackend::complete(const ChatRequest& request) {
  std::string last_cause;
  const int attempts = policy_.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    try {
      return inner_->complete(request);
    } catch (const BackendError& e) {
      if (!e.transient()) throw;
      last_cause = std::string(to_string(e.code())) + ": " + e.what();
    }
    if (attempt + 1 < attempts) sleeper_(backoff_delay(policy_, attempt));
  }
  throw BackendError(ErrorCode::RetriesExhausted,
                     "retries exhausted after " + std::to_string(attempts) + " attempt(s); last cause: " +
                         last_cause,
                     false);
}

// ---------------------------------------------------------------------------

RequestMatcher match_substring(std::string needle) {
  return [needle = std::move(needle)](const ChatRequest& r) {
    return std::any_of(r.messages.begin(), r.messages.end(),
                       [&](const ChatMessage& m) { return m.text.find(needle) != std::string::npos; });
  };
}

RequestMatcher match_last_message(std::string text) {
  return [text = std::move(text)](const ChatRequest& r) {
    return !r.messages.empty() && r.messages.back().text == text;
  };
}

RequestMatcher match_request_hash(std::uint64_t hash) {
  return [hash](const ChatRequest& r) { return request_hash(r) == hash; };
}

RequestMatcher match_any() {
  return [](const ChatRequest&) { return true; };
}

ScriptedMock::ScriptedMock(std::vector<MockRule> rules, MockOptions options)
    : rules_(std::move(rules)), used_(rules_.size(), 0), options_(options) {}

std::string ScriptedMock::complete(const ChatRequest& request) {
  calls_.fetch_add(1);
  const MockRule* hit = nullptr;
  {
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      const auto& rule = rules_[i];
      if (rule.times && used_[i] >= *rule.times) continue;
      if (!rule.matcher(request)) continue;
      ++used_[i];
      hit = &rule;
      break;
    }
  }
  if (options_.max_latency.count() > 0) {
    const auto h = text::fnv1a64(text::hex64(request_hash(request)), options_.latency_seed ^ 0xcbf29ce484222325ULL);
    std::this_thread::sleep_for(std::chrono::microseconds(h % static_cast<std::uint64_t>(options_.max_latency.count())));
  }
  if (!hit) {
    const auto& last = request.messages.empty() ? std::string{} : request.messages.back().text;
    throw Error(ErrorCode::NoRuleMatched, text::hex64(request_hash(request)),
                "no scripted rule matched request (last message: '" + last.substr(0, 80) + "')");
  }
  if (const auto* reply = std::get_if<std::string>(&hit->response)) return *reply;
  const auto& f = std::get<MockFailure>(hit->response);
  throw BackendError(f.code, f.message, f.transient, f.code == ErrorCode::HttpStatus ? f.http_status : 0);
}

std::shared_ptr<ScriptedMock> scripted_mock(std::vector<MockRule> rules, MockOptions options) {
  return std::make_shared<ScriptedMock>(std::move(rules), options);
}

std::vector<MockRule> mock_rules_from_json(const json& rules) {
  if (!rules.is_array()) throw Error(ErrorCode::ConfigInvalid, "mock rules must be a JSON array");
  std::vector<MockRule> out;
  for (const auto& r : rules) {
    MockRule rule;
    rule.matcher = matcher_from_json(r.at("match"));
    if (r.contains("reply")) {
      rule.response = r["reply"].get<std::string>();
    } else if (r.contains("fail")) {
      const auto& f = r["fail"];
      MockFailure failure;
      failure.code = failure_code(f.value("kind", std::string("http")));
      failure.http_status = f.value("status", 503);
      failure.transient = f.value("transient", failure.code != ErrorCode::MalformedResponse);
      failure.message = f.value("message", std::string("scripted failure"));
      rule.response = failure;
    } else {
      throw Error(ErrorCode::ConfigInvalid, "mock rule needs 'reply' or 'fail'");
    }
    if (r.contains("times")) rule.times = r["times"].get<int>();
    out.push_back(std::move(rule));
  }
  return out;
}

std::vector<MockRule> load_mock_rules(const std::filesystem::path& path) {
  try {
    return mock_rules_from_json(json::parse(read_text_file(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string(), "bad mock rules file: " + std::string(e.what()));
  }
}

std::vector<MockRule> load_replay_rules(const std::filesystem::path& path) {
  auto lines = load_json_lines(path);
  if (!lines.rejects.empty())
    throw Error(ErrorCode::ConfigInvalid, path.string(),
                "replay log has malformed line " + std::to_string(lines.rejects.front().line));
  std::vector<MockRule> out;
  for (const auto& row : lines.records) {
    MockRule rule;
    rule.matcher = match_request_hash(std::stoull(row.at("request_hash").get<std::string>(), nullptr, 16));
    rule.response = row.at("reply").get<std::string>();
    out.push_back(std::move(rule));
  }
  return out;
}

ReplayRecorder::ReplayRecorder(std::shared_ptr<ChatBackend> inner, const std::filesystem::path& log_path)
    : inner_(std::move(inner)), log_(log_path, std::ios::binary | std::ios::app) {
  if (!log_) throw Error(ErrorCode::IoFailure, log_path.string(), "cannot open replay log " + log_path.string());
}

std::string ReplayRecorder::complete(const ChatRequest& request) {
  auto reply = inner_->complete(request);
  json row = {{"request_hash", text::hex64(request_hash(request))}, {"request", request}, {"reply", reply}};
  std::lock_guard lock(mu_);
  log_ << row.dump() << '\n';
  log_.flush();
  return reply;
}

}  // namespace visynth
