// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "visynth/corpus.hpp"
#include "visynth/error.hpp"

namespace visynth {

enum class MessageRole { System, User, Assistant };

struct ChatMessage {
  MessageRole role = MessageRole::User;
  std::string text;
  std::optional<ImageRef> image;
  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  int max_new_tokens = 512;
  double temperature = 0.0;
  std::vector<std::string> stop;
  bool operator==(const ChatRequest&) const = default;
};

/// Non-empty messages, images only on user messages, max_new_tokens >= 1,
/// temperature >= 0. Throws InvalidArgument.
void validate(const ChatRequest& request);

void to_json(nlohmann::json& j, const ChatMessage& m);
void from_json(const nlohmann::json& j, ChatMessage& m);
void to_json(nlohmann::json& j, const ChatRequest& r);
void from_json(const nlohmann::json& j, ChatRequest& r);

/// Hash of the message list (roles, texts, image references). Decoding
/// parameters are not part of the key.
std::uint64_t request_hash(const ChatRequest& request);

/// A chat-completion backend. Implementations must be callable from several
/// threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Returns the assistant continuation. Throws BackendError (or Error for
  /// non-network failures such as NoRuleMatched).
  virtual std::string complete(const ChatRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Retries

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds backoff_cap{60000};
};

/// Delay before retry number `retry` (0-based): base * 2^retry, capped.
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry);

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Retries transient BackendErrors up to `max_retries` times. When every
/// attempt fails transiently, throws RetriesExhausted naming the last cause.
class RetryingBackend : public ChatBackend {
 public:
  RetryingBackend(std::shared_ptr<ChatBackend> inner, RetryPolicy policy, Sleeper sleeper = {});
  std::string complete(const ChatRequest& request) override;

 private:
  std::shared_ptr<ChatBackend> inner_;
  RetryPolicy policy_;
  Sleeper sleeper_;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible HTTP backend

struct BackendConfig {
  std::string endpoint;  // full URL of the chat-completions route
  std::string model_name;
  std::chrono::milliseconds timeout{120000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  std::optional<std::string> auth_token;
  std::filesystem::path image_base_dir;  // resolves relative image paths
  int max_new_tokens = 1024;
  double temperature = 0.0;
};

void validate(const BackendConfig& config);
void from_json(const nlohmann::json& j, BackendConfig& c);

/// VISYNTH_ENDPOINT and VISYNTH_API_KEY override the endpoint and auth token.
BackendConfig apply_environment(BackendConfig config);

/// Request body in the chat-completions wire format. Every image reference
/// is materialized as a base64 data URL.
nlohmann::json to_wire(const ChatRequest& request, const std::string& model,
                       const std::filesystem::path& image_base_dir = {});
/// Extracts choices[0].message.content. Throws MalformedResponse.
std::string parse_wire_response(const std::string& body);

/// Single-attempt HTTP client; wrap in RetryingBackend for retries.
class OpenAiChatBackend : public ChatBackend {
 public:
  explicit OpenAiChatBackend(BackendConfig config);
  std::string complete(const ChatRequest& request) override;

 private:
  BackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

std::shared_ptr<ChatBackend> make_http_backend(const BackendConfig& config);

/// One retried call against the configured endpoint.
std::string complete(const ChatRequest& request, const BackendConfig& config);

// ---------------------------------------------------------------------------
// Scripted mock

struct MockFailure {
  ErrorCode code = ErrorCode::HttpStatus;
  bool transient = true;
  int http_status = 503;
  std::string message = "scripted failure";
};

using RequestMatcher = std::function<bool(const ChatRequest&)>;

/// Matches when any message text contains `needle`.
RequestMatcher match_substring(std::string needle);
/// Matches when the final message text equals `text` exactly.
RequestMatcher match_last_message(std::string text);
RequestMatcher match_request_hash(std::uint64_t hash);
RequestMatcher match_any();

struct MockRule {
  RequestMatcher matcher;
  std::variant<std::string, MockFailure> response;
  /// The rule applies only to its first `times` matches; afterwards it is skipped.
  std::optional<int> times;
};

struct MockOptions {
  /// Upper bound of a per-request sleep derived from the request hash, so
  /// completion order differs from submission order under concurrency.
  std::chrono::microseconds max_latency{0};
  std::uint64_t latency_seed = 0;
};

/// Deterministic backend: the first matching rule wins; unmatched requests
/// throw NoRuleMatched.
class ScriptedMock : public ChatBackend {
 public:
  explicit ScriptedMock(std::vector<MockRule> rules, MockOptions options = {});
  std::string complete(const ChatRequest& request) override;
  std::size_t call_count() const { return calls_.load(); }

 private:
  std::vector<MockRule> rules_;
  std::vector<int> used_;
  MockOptions options_;
  std::mutex mu_;
  std::atomic<std::size_t> calls_{0};
};

std::shared_ptr<ScriptedMock> scripted_mock(std::vector<MockRule> rules, MockOptions options = {});

/// Rules file: JSON array of {match, reply | fail, times?}; see docs/schemas.md.
std::vector<MockRule> load_mock_rules(const std::filesystem::path& path);
std::vector<MockRule> mock_rules_from_json(const nlohmann::json& rules);

/// Rules keyed by request hash, one per line of a replay log.
std::vector<MockRule> load_replay_rules(const std::filesystem::path& path);

/// Forwards to `inner` and appends {request_hash, request, reply} to a JSONL
/// replay log for every successful call.
class ReplayRecorder : public ChatBackend {
 public:
  ReplayRecorder(std::shared_ptr<ChatBackend> inner, const std::filesystem::path& log_path);
  std::string complete(const ChatRequest& request) override;

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::mutex mu_;
  std::ofstream log_;
};

}  // namespace visynth
