// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

// A toy pipeline workspace on disk: pairs, seed sources, scripted backend
// rules, evaluation instances and a config tying them together.

#pragma once

#include <functional>

#include "support/support.hpp"
#include "visynth/filterkit.hpp"

namespace visynth::testing {

struct ToyPipelineOptions {
  std::size_t pairs = 50;
  std::set<std::string> garbled;  // pair ids answered without markers
  std::set<std::string> failing;  // pair ids answered with HTTP 500
  // Index into the successfully synthesized triplets -> judged consistent.
  std::function<bool(std::size_t)> consistent = [](std::size_t i) { return i % 3 != 1; };
  std::size_t eval_instances = 12;
  std::int64_t max_latency_us = 0;
  std::size_t max_in_flight = 4;
  std::uint64_t rng_seed = 11;
};

struct ToyPipeline {
  std::filesystem::path config;
  std::filesystem::path output_dir;
  std::vector<ImageCaptionPair> pairs;
  std::vector<TaskTriplet> triplets;  // successful synthesis outputs, in pair order
  std::set<std::size_t> consistent;
  std::size_t eval_correct = 0;
};

inline ToyPipeline write_toy_pipeline(const std::filesystem::path& dir, const ToyPipelineOptions& o = {}) {
  using nlohmann::json;
  ToyPipeline tp;
  tp.pairs = toy_pairs(o.pairs);
  tp.output_dir = dir / "out";

  std::vector<json> pair_rows, task_rows, caption_rows;
  for (const auto& p : tp.pairs) {
    pair_rows.push_back(p);
    const auto t = triplet_for(p);
    task_rows.push_back({{"id", p.id}, {"image", p.image}, {"instruction", t.instruction},
                         {"precise_response", t.precise_response}});
    caption_rows.push_back({{"id", p.id}, {"caption", p.caption}, {"informative_response", t.informative_response}});
    if (!o.garbled.count(p.id) && !o.failing.count(p.id)) tp.triplets.push_back(t);
  }
  // One unmatched record on each side exercises the join report.
  task_rows.push_back({{"id", "orphan-task"}, {"image", ImageRef::file("x.png")}, {"instruction", "q"},
                       {"precise_response", "a"}});
  caption_rows.push_back({{"id", "orphan-caption"}, {"caption", "c"}, {"informative_response", "r"}});
  write_json_lines(pair_rows, dir / "pairs.jsonl");
  write_json_lines(task_rows, dir / "task_source.jsonl");
  write_json_lines(caption_rows, dir / "caption_source.jsonl");

  for (std::size_t i = 0; i < tp.triplets.size(); ++i)
    if (o.consistent(i)) tp.consistent.insert(i);
  write_text_file(dir / "synth_rules.json", synth_rules_json(tp.pairs, plain_template(), o.garbled, o.failing).dump(1));
  write_text_file(dir / "judge_rules.json", judge_rules_json(tp.triplets, tp.consistent).dump(1));

  std::vector<json> instances;
  std::vector<std::pair<std::string, std::string>> qa;
  for (std::size_t i = 0; i < o.eval_instances; ++i) {
    const auto q = "Which region is marked in scan " + std::to_string(i) + "?";
    const std::string gold = i % 2 ? "right lower lobe" : "left upper lobe";
    const bool right = i % 4 != 3;
    tp.eval_correct += right;
    instances.push_back({{"id", "e" + std::to_string(i)}, {"image", ImageRef::blank(8, 8)},
                         {"fields", {{"question", q}}}, {"gold", gold}});
    qa.push_back({q, right ? "The " + gold + "." : "Nothing abnormal."});
  }
  write_json_lines(instances, dir / "slake_open.jsonl");
  write_text_file(dir / "eval_rules.json", echo_rules_json(qa).dump(1));

  auto backend = [&](const char* rules) {
    return json{{"kind", "scripted"}, {"rules", rules}, {"max_latency_us", o.max_latency_us}, {"latency_seed", 5}};
  };
  const json config = {
      {"paths",
       {{"pairs", "pairs.jsonl"},
        {"task_source", "task_source.jsonl"},
        {"caption_source", "caption_source.jsonl"},
        {"output_dir", "out"},
        {"eval_instances", {{"slake_open", "slake_open.jsonl"}}}}},
      {"backends",
       {{"synthesizer", backend("synth_rules.json")},
        {"judge", backend("judge_rules.json")},
        {"eval", backend("eval_rules.json")}}},
      {"rng_seed", o.rng_seed},
      {"fraction", 0.1},
      {"blank_size", {16, 16}},
      {"max_in_flight", o.max_in_flight}};
  tp.config = dir / "pipeline.json";
  write_text_file(tp.config, config.dump(2));
  return tp;
}

}  // namespace visynth::testing
