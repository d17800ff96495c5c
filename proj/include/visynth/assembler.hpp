// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visynth/chat_template.hpp"
#include "visynth/corpus.hpp"
#include "visynth/filterkit.hpp"

namespace visynth {

/// Questions that ask a model to describe an image. Non-empty, entries
/// non-empty and distinct.
class CaptionQuestionPool {
 public:
  /// Throws EmptyPool for an empty list and InvalidArgument for blank or
  /// duplicate entries.
  explicit CaptionQuestionPool(std::vector<std::string> questions);

  const std::vector<std::string>& questions() const { return questions_; }
  std::size_t size() const { return questions_.size(); }
  /// FNV-1a over the questions in order, hex encoded.
  std::string hash() const;

 private:
  std::vector<std::string> questions_;
};

CaptionQuestionPool default_caption_pool();
/// Accepts a JSON array of strings or {"questions": [...]}.
CaptionQuestionPool load_caption_pool(const std::filesystem::path& path);

/// Uniform choice from the stream keyed by (seed, index).
const std::string& pick_caption_question(const CaptionQuestionPool& pool, std::uint64_t rng_seed,
                                         std::uint64_t index);

/// Stable per-pair key for the question stream; depends only on the pair id.
std::uint64_t example_key(const ImageCaptionPair& pair);

/// (user: image + pooled question, assistant: caption) and, with a task,
/// (user: instruction, assistant: CoT response). Only assistant turns carry loss.
TrainingExample build_single_stage(const ImageCaptionPair& pair, const std::optional<CotTask>& task,
                                   const CaptionQuestionPool& pool, std::uint64_t rng_seed, std::uint64_t index);

using TaskMap = std::map<std::string, CotTask>;

/// One example per pair, in pair order; each keyed by example_key(pair).
std::vector<TrainingExample> build_single_stage_dataset(std::span<const ImageCaptionPair> pairs, const TaskMap& tasks,
                                                        const CaptionQuestionPool& pool, std::uint64_t rng_seed);

struct TwoStageOptions {
  /// Also copy every stage-1 caption example into stage 2.
  bool reuse_caption = false;
};

struct TwoStageDatasets {
  std::vector<TrainingExample> stage1;
  std::vector<TrainingExample> stage2;
};

/// Stage 1: one caption example per pair. Stage 2: one (user: image +
/// instruction, assistant: response) example per task whose pair is present.
TwoStageDatasets build_two_stage(std::span<const ImageCaptionPair> pairs, const TaskMap& tasks,
                                 const CaptionQuestionPool& pool, std::uint64_t rng_seed,
                                 const TwoStageOptions& options = {});

/// Mask spans cover exactly the loss-bearing turns. Throws TemplateInvalid
/// or RecordInvalid for an invalid example.
LossMaskedSequence render_training_sequence(const TrainingExample& example, const ChatTemplate& tmpl,
                                            const RenderOptions& options = {});

struct DatasetManifest {
  std::map<std::string, std::size_t> counts_by_provenance;
  std::size_t examples = 0;
  std::size_t pairs = 0;
  std::size_t tasks = 0;
  std::uint64_t rng_seed = 0;
  std::string pool_hash;
};

DatasetManifest make_manifest(std::span<const TrainingExample> examples, std::size_t pairs, std::size_t tasks,
                              std::uint64_t rng_seed, const CaptionQuestionPool& pool);
void to_json(nlohmann::json& j, const DatasetManifest& m);

}  // namespace visynth
