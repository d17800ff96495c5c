// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visynth/corpus.hpp"

namespace visynth {

/// Data-driven description of a model's chat format. A turn renders as
/// `role prefix + [image placeholder] + text + turn separator`.
struct ChatTemplate {
  std::string role_user;
  std::string role_assistant;
  std::string turn_separator;
  std::string image_placeholder;
  std::optional<std::string> system_preamble;
  bool operator==(const ChatTemplate&) const = default;
};

/// Throws TemplateInvalid when role prefixes are empty or equal, or the
/// image placeholder is empty.
void validate(const ChatTemplate& tmpl);

/// "User: " / "Assistant: " with newline separators.
ChatTemplate plain_template();
/// Llama-3 header tokens, as used by LLaVA-v1.6-8B style synthesizers.
ChatTemplate llama3_template();

ChatTemplate load_template(const std::filesystem::path& path);
void to_json(nlohmann::json& j, const ChatTemplate& t);
void from_json(const nlohmann::json& j, ChatTemplate& t);

struct RenderOptions {
  /// When set, mask spans also cover the role prefix, image placeholder and
  /// separator of each loss-bearing turn.
  bool include_control_tokens = false;
};

/// Byte offsets of one rendered turn.
struct TurnLayout {
  Role role = Role::User;
  std::size_t turn_begin = 0;
  std::size_t content_begin = 0;
  std::size_t content_end = 0;
  std::size_t turn_end = 0;
};

struct RenderedConversation {
  LossMaskedSequence sequence;
  std::vector<TurnLayout> layout;
};

/// Renders turns in order; every loss-bearing turn contributes one mask span.
RenderedConversation render_turns(std::span<const ChatTurn> turns, const ChatTemplate& tmpl,
                                  const RenderOptions& options = {});

}  // namespace visynth
