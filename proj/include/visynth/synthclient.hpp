// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "visynth/backends.hpp"
#include "visynth/chat_template.hpp"
#include "visynth/corpus.hpp"

namespace visynth {

struct SynthesisOptions {
  int max_new_tokens = 1024;
  double temperature = 0.0;
};

/// Caption conversation prefix: (user: image + "Describe the image.",
/// assistant: caption). The backend continues with the two exchanges.
ChatRequest build_synthesis_prompt(const ImageCaptionPair& pair, const SynthesisOptions& options = {});

/// Renders request messages with the template, including the system preamble.
std::string render_request(const ChatRequest& request, const ChatTemplate& tmpl);

struct ParsedTriplet {
  TaskTriplet triplet;
  /// The two exchanges carried different instructions; the precise-turn one is kept.
  bool instruction_mismatch = false;
};

/// Extracts (instruction, precise, informative) from a synthesizer
/// completion. Turn boundaries are the template's separator followed by a
/// role prefix. Fields are returned trimmed.
/// Throws MissingMarker(precise|informative), EmptyField(field name) or
/// MalformedTurnStructure.
ParsedTriplet parse_task_triplet(std::string_view raw, const ChatTemplate& tmpl);

struct ParseFailure {
  std::string reason;
  std::string raw_text;
  bool operator==(const ParseFailure&) const = default;
};

struct BackendFailure {
  std::string reason;
  bool operator==(const BackendFailure&) const = default;
};

struct SynthesisOutcome {
  std::string pair_id;
  std::variant<TaskTriplet, ParseFailure, BackendFailure> result;
  bool instruction_mismatch = false;

  bool ok() const { return std::holds_alternative<TaskTriplet>(result); }
  bool operator==(const SynthesisOutcome&) const = default;
};

void to_json(nlohmann::json& j, const SynthesisOutcome& o);
void from_json(const nlohmann::json& j, SynthesisOutcome& o);

/// One outcome per pair in input order; failures never abort the batch.
std::vector<SynthesisOutcome> synthesize_batch(std::span<const ImageCaptionPair> pairs, ChatBackend& backend,
                                               std::size_t max_in_flight, const ChatTemplate& tmpl,
                                               const SynthesisOptions& options = {});

struct SynthesisStats {
  std::size_t total = 0;
  std::size_t triplets = 0;
  std::size_t parse_failures = 0;
  std::size_t backend_failures = 0;
  std::size_t instruction_mismatches = 0;
  double parse_failure_rate = 0.0;  // parse_failures / total
};

SynthesisStats summarize(std::span<const SynthesisOutcome> outcomes);
void to_json(nlohmann::json& j, const SynthesisStats& s);

}  // namespace visynth
