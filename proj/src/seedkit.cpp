// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "visynth/seedkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "visynth/error.hpp"
#include "visynth/rng.hpp"

namespace visynth {
namespace {

std::vector<ChatTurn> exchange_turns(const TaskTriplet& t) {
  return {
      {Role::User, std::string(kPreciseMarker) + " " + t.instruction, std::nullopt, true},
      {Role::Assistant, t.precise_response, std::nullopt, true},
      {Role::User, std::string(kInformativeMarker) + " " + t.instruction, std::nullopt, true},
      {Role::Assistant, t.informative_response, std::nullopt, true},
  };
}

}  // namespace

void from_json(const nlohmann::json& j, TaskSourceRecord& r) {
  r.id = j.at("id").get<std::string>();
  r.image = j.at("image").get<ImageRef>();
  r.instruction = j.at("instruction").get<std::string>();
  r.precise_response = j.at("precise_response").get<std::string>();
  r.task_name.reset();
  if (j.contains("task_name") && j["task_name"].is_string()) r.task_name = j["task_name"].get<std::string>();
}

void from_json(const nlohmann::json& j, CaptionSourceRecord& r) {
  r.id = j.at("id").get<std::string>();
  r.caption = j.at("caption").get<std::string>();
  r.informative_response = j.at("informative_response").get<std::string>();
}

void to_json(nlohmann::json& j, const SourceJoinReport& r) {
  j = {{"matched", r.matched}, {"unmatched_a", r.unmatched_a}, {"unmatched_b", r.unmatched_b}};
}

SeedMergeResult merge_seed_sources(std::span<const TaskSourceRecord> task_records,
                                   std::span<const CaptionSourceRecord> caption_records) {
  std::unordered_set<std::string_view> task_ids;
  for (const auto& t : task_records) {
    if (!task_ids.insert(t.id).second)
      throw Error(ErrorCode::DuplicateId, "task_source:" + t.id, "duplicate id '" + t.id + "' in task source");
  }
  std::unordered_map<std::string_view, const CaptionSourceRecord*> captions;
  for (const auto& c : caption_records) {
    if (!captions.emplace(c.id, &c).second)
      throw Error(ErrorCode::DuplicateId, "caption_source:" + c.id,
                  "duplicate id '" + c.id + "' in caption source");
  }

  SeedMergeResult out;
  for (const auto& t : task_records) {
    const auto it = captions.find(t.id);
    if (it == captions.end()) {
      ++out.report.unmatched_a;
      continue;
    }
    SeedRecord record{{t.id, t.image, it->second->caption, std::nullopt},
                      {t.instruction, it->second->informative_response, t.precise_response},
                      t.task_name};
    validate(record);
    out.records.push_back(std::move(record));
    ++out.report.matched;
  }
  out.report.unmatched_b = caption_records.size() - out.report.matched;
  return out;
}

std::size_t replacement_count(std::size_t n, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw Error(ErrorCode::FractionOutOfRange, std::to_string(fraction),
                "fraction must lie in [0, 1], got " + std::to_string(fraction));
  // A fraction given in decimal rarely has an exact binary form (0.7 * 45 is
  // 31.4999...), so products within a few ulps of a half round up.
  const double scaled = fraction * static_cast<double>(n);
  return static_cast<std::size_t>(std::floor(scaled + 0.5 + 1e-9 * std::max(1.0, scaled)));
}

AugmentResult apply_blank_augmentation(std::span<const SeedRecord> records, double fraction,
                                       std::uint64_t rng_seed, BlankImage blank) {
  const std::size_t n = records.size();
  const std::size_t k = replacement_count(n, fraction);
  if (blank.width <= 0 || blank.height <= 0)
    throw Error(ErrorCode::InvalidArgument, "blank image dimensions must be positive");

  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(rng_seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(order[i], order[j]);
  }

  AugmentResult out;
  out.records.assign(records.begin(), records.end());
  out.replaced_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(out.replaced_indices.begin(), out.replaced_indices.end());
  for (auto idx : out.replaced_indices) out.records[idx].pair.image = ImageRef{blank};
  return out;
}

TrainingExample synthesizer_tuning_example(const SeedRecord& record) {
  validate(record);
  TrainingExample ex;
  ex.provenance = Provenance::SynthesizerTuning;
  ex.source_pair_id = record.pair.id;
  ex.turns.push_back({Role::User, std::string(kDescribeImage), record.pair.image, false});
  ex.turns.push_back({Role::Assistant, record.pair.caption, std::nullopt, false});
  for (auto& t : exchange_turns(record.triplet)) ex.turns.push_back(std::move(t));
  return ex;
}

LossMaskedSequence render_synthesizer_tuning(const SeedRecord& record, const ChatTemplate& tmpl,
                                             const RenderOptions& options) {
  const auto ex = synthesizer_tuning_example(record);
  return render_turns(ex.turns, tmpl, options).sequence;
}

std::string render_triplet_exchanges(const TaskTriplet& triplet, const ChatTemplate& tmpl) {
  auto bare = tmpl;
  bare.system_preamble.reset();
  const auto turns = exchange_turns(triplet);
  return render_turns(turns, bare).sequence.rendered_text();
}

}  // namespace visynth
