// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "visynth/chat_template.hpp"

#include "visynth/error.hpp"

namespace visynth {

void validate(const ChatTemplate& tmpl) {
  if (tmpl.role_user.empty() || tmpl.role_assistant.empty())
    throw Error(ErrorCode::TemplateInvalid, "role prefixes must be non-empty");
  if (tmpl.role_user == tmpl.role_assistant)
    throw Error(ErrorCode::TemplateInvalid, "user and assistant prefixes must differ");
  if (tmpl.image_placeholder.empty())
    throw Error(ErrorCode::TemplateInvalid, "image placeholder must be non-empty");
}

ChatTemplate plain_template() {
  return {"User: ", "Assistant: ", "\n", "<image>\n", std::nullopt};
}

ChatTemplate llama3_template() {
  return {"<|start_header_id|>user<|end_header_id|>\n\n",
          "<|start_header_id|>assistant<|end_header_id|>\n\n", "<|eot_id|>", "<image>\n",
          "<|begin_of_text|>"};
}

void to_json(nlohmann::json& j, const ChatTemplate& t) {
  j = {{"role_user", t.role_user},
       {"role_assistant", t.role_assistant},
       {"turn_separator", t.turn_separator},
       {"image_placeholder", t.image_placeholder}};
  if (t.system_preamble) j["system_preamble"] = *t.system_preamble;
}

void from_json(const nlohmann::json& j, ChatTemplate& t) {
  try {
    t.role_user = j.at("role_user").get<std::string>();
    t.role_assistant = j.at("role_assistant").get<std::string>();
    t.turn_separator = j.at("turn_separator").get<std::string>();
    t.image_placeholder = j.at("image_placeholder").get<std::string>();
    t.system_preamble.reset();
    if (j.contains("system_preamble") && !j["system_preamble"].is_null())
      t.system_preamble = j["system_preamble"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::TemplateInvalid, std::string("bad chat template: ") + e.what());
  }
  validate(t);
}

ChatTemplate load_template(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::TemplateInvalid, path.string(), "cannot parse template: " + std::string(e.what()));
  }
  return j.get<ChatTemplate>();
}

RenderedConversation render_turns(std::span<const ChatTurn> turns, const ChatTemplate& tmpl,
                                  const RenderOptions& options) {
  validate(tmpl);
  std::string text = tmpl.system_preamble.value_or("");
  std::vector<MaskSpan> spans;
  std::vector<ImageRef> images;
  std::vector<TurnLayout> layout;
  layout.reserve(turns.size());

  for (const auto& turn : turns) {
    TurnLayout l;
    l.role = turn.role;
    l.turn_begin = text.size();
    text += turn.role == Role::User ? tmpl.role_user : tmpl.role_assistant;
    if (turn.image) {
      text += tmpl.image_placeholder;
      images.push_back(*turn.image);
    }
    l.content_begin = text.size();
    text += turn.text;
    l.content_end = text.size();
    text += tmpl.turn_separator;
    l.turn_end = text.size();

    if (turn.loss_bearing) {
      MaskSpan span = options.include_control_tokens ? MaskSpan{l.turn_begin, l.turn_end}
                                                     : MaskSpan{l.content_begin, l.content_end};
      if (span.start < span.end) spans.push_back(span);
    }
    layout.push_back(l);
  }
  return {LossMaskedSequence(std::move(text), std::move(spans), std::move(images)), std::move(layout)};
}

}  // namespace visynth
