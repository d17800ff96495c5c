// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "visynth/synthclient.hpp"

#include "visynth/error.hpp"
#include "visynth/parallel.hpp"
#include "visynth/seedkit.hpp"
#include "visynth/text.hpp"

namespace visynth {
namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw Error(ErrorCode::MalformedTurnStructure, why, "malformed turn structure: " + why);
}

std::string take_field(std::string_view raw, std::size_t begin, std::size_t end, const char* name) {
  auto field = text::trim(raw.substr(begin, end - begin));
  if (field.empty()) throw Error(ErrorCode::EmptyField, name, std::string("empty field: ") + name);
  return std::string(field);
}

}  // namespace

ChatRequest build_synthesis_prompt(const ImageCaptionPair& pair, const SynthesisOptions& options) {
  ChatRequest req;
  req.messages.push_back({MessageRole::User, std::string(kDescribeImage), pair.image});
  req.messages.push_back({MessageRole::Assistant, pair.caption, std::nullopt});
  req.max_new_tokens = options.max_new_tokens;
  req.temperature = options.temperature;
  return req;
}

std::string render_request(const ChatRequest& request, const ChatTemplate& tmpl) {
  std::vector<ChatTurn> turns;
  std::string system_text;
  for (const auto& m : request.messages) {
    if (m.role == MessageRole::System) {
      system_text += m.text + tmpl.turn_separator;
      continue;
    }
    turns.push_back({m.role == MessageRole::User ? Role::User : Role::Assistant, m.text, m.image, false});
  }
  auto rendered = render_turns(turns, tmpl).sequence.rendered_text();
  if (system_text.empty()) return rendered;
  const auto preamble_len = tmpl.system_preamble ? tmpl.system_preamble->size() : 0;
  return rendered.insert(preamble_len, system_text);
}

ParsedTriplet parse_task_triplet(std::string_view raw, const ChatTemplate& tmpl) {
  validate(tmpl);
  const std::string to_assistant = tmpl.turn_separator + tmpl.role_assistant;
  const std::string to_user = tmpl.turn_separator + tmpl.role_user;
  constexpr auto npos = std::string_view::npos;

  const auto precise_at = raw.find(kPreciseMarker);
  if (precise_at == npos)
    throw Error(ErrorCode::MissingMarker, "precise", "missing marker: " + std::string(kPreciseMarker));
  const auto informative_at = raw.find(kInformativeMarker, precise_at);
  if (informative_at == npos) {
    if (raw.find(kInformativeMarker) != npos) malformed("informative exchange precedes precise exchange");
    throw Error(ErrorCode::MissingMarker, "informative", "missing marker: " + std::string(kInformativeMarker));
  }

  // Precise exchange.
  const auto instr_begin = precise_at + kPreciseMarker.size();
  const auto precise_turn = raw.find(to_assistant, instr_begin);
  if (precise_turn == npos || precise_turn > informative_at) malformed("no assistant turn after precise instruction");
  const auto precise_begin = precise_turn + to_assistant.size();
  const auto precise_end = raw.find(to_user, precise_begin);
  if (precise_end == npos || precise_end > informative_at) malformed("no user turn after precise response");
  if (!text::is_blank(raw.substr(precise_end + to_user.size(), informative_at - precise_end - to_user.size())))
    malformed("unexpected text before informative marker");

  // Informative exchange.
  const auto instr2_begin = informative_at + kInformativeMarker.size();
  const auto informative_turn = raw.find(to_assistant, instr2_begin);
  if (informative_turn == npos) malformed("no assistant turn after informative instruction");
  const auto informative_begin = informative_turn + to_assistant.size();
  auto informative_end = raw.find(to_user, informative_begin);
  if (informative_end == npos) informative_end = raw.size();

  // The last turn may end with the separator and trailing whitespace.
  auto tail = raw.substr(informative_begin, informative_end - informative_begin);
  tail = text::trim(tail);
  if (!tmpl.turn_separator.empty() && text::trim(tmpl.turn_separator).size() > 0 &&
      tail.ends_with(text::trim(tmpl.turn_separator)))
    tail.remove_suffix(text::trim(tmpl.turn_separator).size());

  ParsedTriplet out;
  out.triplet.instruction = take_field(raw, instr_begin, precise_turn, "instruction");
  out.triplet.precise_response = take_field(raw, precise_begin, precise_end, "precise_response");
  out.triplet.informative_response = take_field(tail, 0, tail.size(), "informative_response");
  const auto second_instruction = text::trim(raw.substr(instr2_begin, informative_turn - instr2_begin));
  out.instruction_mismatch = second_instruction != out.triplet.instruction;
  return out;
}

void to_json(nlohmann::json& j, const SynthesisOutcome& o) {
  j = {{"pair_id", o.pair_id}};
  if (const auto* t = std::get_if<TaskTriplet>(&o.result)) {
    j["status"] = "triplet";
    j["triplet"] = *t;
    j["instruction_mismatch"] = o.instruction_mismatch;
  } else if (const auto* p = std::get_if<ParseFailure>(&o.result)) {
    j["status"] = "parse_failure";
    j["reason"] = p->reason;
    j["raw_text"] = p->raw_text;
  } else {
    j["status"] = "backend_failure";
    j["reason"] = std::get<BackendFailure>(o.result).reason;
  }
}

void from_json(const nlohmann::json& j, SynthesisOutcome& o) {
  o.pair_id = j.at("pair_id").get<std::string>();
  const auto status = j.at("status").get<std::string>();
  o.instruction_mismatch = j.value("instruction_mismatch", false);
  if (status == "triplet") {
    o.result = j.at("triplet").get<TaskTriplet>();
  } else if (status == "parse_failure") {
    o.result = ParseFailure{j.at("reason").get<std::string>(), j.at("raw_text").get<std::string>()};
  } else if (status == "backend_failure") {
    o.result = BackendFailure{j.at("reason").get<std::string>()};
  } else {
    throw Error(ErrorCode::RecordInvalid, "unknown outcome status '" + status + "'");
  }
}

std::vector<SynthesisOutcome> synthesize_batch(std::span<const ImageCaptionPair> pairs, ChatBackend& backend,
                                               std::size_t max_in_flight, const ChatTemplate& tmpl,
                                               const SynthesisOptions& options) {
  validate(tmpl);
  return ordered_parallel_map(pairs.size(), max_in_flight, [&](std::size_t i) {
    const auto& pair = pairs[i];
    SynthesisOutcome outcome{pair.id, BackendFailure{}, false};
    std::string raw;
    try {
      raw = backend.complete(build_synthesis_prompt(pair, options));
    } catch (const std::exception& e) {
      outcome.result = BackendFailure{e.what()};
      return outcome;
    }
    try {
      auto parsed = parse_task_triplet(raw, tmpl);
      outcome.result = std::move(parsed.triplet);
      outcome.instruction_mismatch = parsed.instruction_mismatch;
    } catch (const Error& e) {
      outcome.result = ParseFailure{e.what(), raw};
    }
    return outcome;
  });
}

SynthesisStats summarize(std::span<const SynthesisOutcome> outcomes) {
  SynthesisStats s;
  s.total = outcomes.size();
  for (const auto& o : outcomes) {
    if (o.ok()) {
      ++s.triplets;
      if (o.instruction_mismatch) ++s.instruction_mismatches;
    } else if (std::holds_alternative<ParseFailure>(o.result)) {
      ++s.parse_failures;
    } else {
      ++s.backend_failures;
    }
  }
  s.parse_failure_rate = s.total ? static_cast<double>(s.parse_failures) / static_cast<double>(s.total) : 0.0;
  return s;
}

void to_json(nlohmann::json& j, const SynthesisStats& s) {
  j = {{"total", s.total},
       {"triplets", s.triplets},
       {"parse_failures", s.parse_failures},
       {"backend_failures", s.backend_failures},
       {"instruction_mismatches", s.instruction_mismatches},
       {"parse_failure_rate", s.parse_failure_rate}};
}

}  // namespace visynth
