// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "visynth/chat_template.hpp"
#include "visynth/corpus.hpp"

namespace visynth {

inline constexpr std::string_view kDescribeImage = "Describe the image.";
inline constexpr std::string_view kPreciseMarker = "Answer with a precise response.";
inline constexpr std::string_view kInformativeMarker = "Answer with an informative response.";

/// Instruction-task source: image, instruction and the short answer.
struct TaskSourceRecord {
  std::string id;
  ImageRef image;
  std::string instruction;
  std::string precise_response;
  std::optional<std::string> task_name;
};

/// Caption source: caption plus the long regenerated answer for the same id.
struct CaptionSourceRecord {
  std::string id;
  std::string caption;
  std::string informative_response;
};

void from_json(const nlohmann::json& j, TaskSourceRecord& r);
void from_json(const nlohmann::json& j, CaptionSourceRecord& r);

struct SourceJoinReport {
  std::size_t matched = 0;
  std::size_t unmatched_a = 0;
  std::size_t unmatched_b = 0;
  bool operator==(const SourceJoinReport&) const = default;
};

void to_json(nlohmann::json& j, const SourceJoinReport& r);

struct SeedMergeResult {
  std::vector<SeedRecord> records;  // in task-source order
  SourceJoinReport report;
};

/// Inner join on id. Throws DuplicateId (detail "task_source:<id>" or
/// "caption_source:<id>") and RecordInvalid for joined records that fail validation.
SeedMergeResult merge_seed_sources(std::span<const TaskSourceRecord> task_records,
                                   std::span<const CaptionSourceRecord> caption_records);

/// round-half-up of fraction * n.
std::size_t replacement_count(std::size_t n, double fraction);

struct AugmentResult {
  std::vector<SeedRecord> records;
  std::vector<std::size_t> replaced_indices;  // ascending
};

/// Replaces the images of exactly replacement_count(N, fraction) records,
/// chosen uniformly without replacement, by blank images. Deterministic in
/// `rng_seed`. Throws FractionOutOfRange.
AugmentResult apply_blank_augmentation(std::span<const SeedRecord> records, double fraction,
                                       std::uint64_t rng_seed, BlankImage blank = {336, 336});

/// The six Table-1 style turns; only the two triplet exchanges carry loss.
TrainingExample synthesizer_tuning_example(const SeedRecord& record);

LossMaskedSequence render_synthesizer_tuning(const SeedRecord& record, const ChatTemplate& tmpl,
                                             const RenderOptions& options = {});

/// Turns 3-6 alone, rendered without the system preamble. This is what a
/// tuned synthesizer is expected to generate after the caption turn.
std::string render_triplet_exchanges(const TaskTriplet& triplet, const ChatTemplate& tmpl);

}  // namespace visynth
