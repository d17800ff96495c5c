// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "visynth/assembler.hpp"

#include <set>

#include "visynth/error.hpp"
#include "visynth/rng.hpp"
#include "visynth/text.hpp"

namespace visynth {

CaptionQuestionPool::CaptionQuestionPool(std::vector<std::string> questions) : questions_(std::move(questions)) {
  if (questions_.empty()) throw Error(ErrorCode::EmptyPool, "caption question pool is empty");
  std::set<std::string_view> seen;
  for (const auto& q : questions_) {
    if (text::is_blank(q)) throw Error(ErrorCode::InvalidArgument, "caption question pool has a blank entry");
    if (!seen.insert(q).second) throw Error(ErrorCode::InvalidArgument, q, "duplicate caption question: " + q);
  }
}

std::string CaptionQuestionPool::hash() const {
  std::uint64_t h = text::fnv1a64("");
  for (const auto& q : questions_) {
    h = text::fnv1a64(q, h);
    h = text::fnv1a64(std::string_view("\0", 1), h);
  }
  return text::hex64(h);
}

CaptionQuestionPool default_caption_pool() {
  return CaptionQuestionPool({
      "Describe the image.",
      "What is shown in this image?",
      "Provide a detailed description of the image.",
      "Describe the contents of this picture in detail.",
      "What do you see in this image?",
      "Write a caption for this image.",
      "Explain what this image depicts.",
      "Give a thorough description of the visual content.",
      "Summarize the main elements visible in the image.",
      "Describe the scene captured in this image.",
  });
}

CaptionQuestionPool load_caption_pool(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
    if (j.is_object()) j = j.at("questions");
    return CaptionQuestionPool(j.get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string(), "bad caption pool file: " + std::string(e.what()));
  }
}

const std::string& pick_caption_question(const CaptionQuestionPool& pool, std::uint64_t rng_seed,
                                         std::uint64_t index) {
  auto stream = keyed_stream(rng_seed, index);
  return pool.questions()[static_cast<std::size_t>(stream.below(pool.size()))];
}

std::uint64_t example_key(const ImageCaptionPair& pair) { return text::fnv1a64(pair.id); }

TrainingExample build_single_stage(const ImageCaptionPair& pair, const std::optional<CotTask>& task,
                                   const CaptionQuestionPool& pool, std::uint64_t rng_seed, std::uint64_t index) {
  validate(pair);
  TrainingExample ex;
  ex.source_pair_id = pair.id;
  ex.turns.push_back({Role::User, pick_caption_question(pool, rng_seed, index), pair.image, false});
  ex.turns.push_back({Role::Assistant, pair.caption, std::nullopt, true});
  if (task) {
    ex.turns.push_back({Role::User, task->instruction, std::nullopt, false});
    ex.turns.push_back({Role::Assistant, task->response, std::nullopt, true});
    ex.provenance = Provenance::CaptionPlusSynthetic;
  } else {
    ex.provenance = Provenance::CaptionOnly;
  }
  return ex;
}

std::vector<TrainingExample> build_single_stage_dataset(std::span<const ImageCaptionPair> pairs, const TaskMap& tasks,
                                                        const CaptionQuestionPool& pool, std::uint64_t rng_seed) {
  std::vector<TrainingExample> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs) {
    const auto it = tasks.find(pair.id);
    const auto task = it == tasks.end() ? std::nullopt : std::optional<CotTask>(it->second);
    out.push_back(build_single_stage(pair, task, pool, rng_seed, example_key(pair)));
  }
  return out;
}

TwoStageDatasets build_two_stage(std::span<const ImageCaptionPair> pairs, const TaskMap& tasks,
                                 const CaptionQuestionPool& pool, std::uint64_t rng_seed,
                                 const TwoStageOptions& options) {
  TwoStageDatasets out;
  for (const auto& pair : pairs) {
    auto caption = build_single_stage(pair, std::nullopt, pool, rng_seed, example_key(pair));
    caption.provenance = Provenance::Stage1;
    if (options.reuse_caption) out.stage2.push_back(caption);
    out.stage1.push_back(std::move(caption));

    const auto it = tasks.find(pair.id);
    if (it == tasks.end()) continue;
    TrainingExample task;
    task.provenance = Provenance::Stage2;
    task.source_pair_id = pair.id;
    task.turns.push_back({Role::User, it->second.instruction, pair.image, false});
    task.turns.push_back({Role::Assistant, it->second.response, std::nullopt, true});
    out.stage2.push_back(std::move(task));
  }
  return out;
}

LossMaskedSequence render_training_sequence(const TrainingExample& example, const ChatTemplate& tmpl,
                                            const RenderOptions& options) {
  validate(example);
  return render_turns(example.turns, tmpl, options).sequence;
}

DatasetManifest make_manifest(std::span<const TrainingExample> examples, std::size_t pairs, std::size_t tasks,
                              std::uint64_t rng_seed, const CaptionQuestionPool& pool) {
  DatasetManifest m;
  for (const auto& ex : examples) ++m.counts_by_provenance[std::string(to_string(ex.provenance))];
  m.examples = examples.size();
  m.pairs = pairs;
  m.tasks = tasks;
  m.rng_seed = rng_seed;
  m.pool_hash = pool.hash();
  return m;
}

void to_json(nlohmann::json& j, const DatasetManifest& m) {
  j = {{"counts_by_provenance", m.counts_by_provenance},
       {"examples", m.examples},
       {"pairs", m.pairs},
       {"tasks", m.tasks},
       {"rng_seed", m.rng_seed},
       {"pool_hash", m.pool_hash}};
}

}  // namespace visynth
