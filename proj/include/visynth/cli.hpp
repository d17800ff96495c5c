// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visynth/chat_template.hpp"

namespace visynth::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kBackend = 3 };

/// Parsed pipeline configuration. Relative paths are resolved against the
/// directory of the config file.
struct PipelineConfig {
  std::filesystem::path base_dir;
  nlohmann::json raw;

  ChatTemplate chat_template;
  std::optional<std::filesystem::path> caption_pool;
  std::optional<std::filesystem::path> judge_prompt;
  std::string cot_connective;

  std::optional<std::filesystem::path> pairs;
  std::optional<std::filesystem::path> task_source;
  std::optional<std::filesystem::path> caption_source;
  std::optional<std::filesystem::path> eval_tasks;
  std::map<std::string, std::filesystem::path> eval_instances;
  std::optional<std::filesystem::path> annotations;
  std::optional<std::filesystem::path> filter_annotations_pre;
  std::optional<std::filesystem::path> filter_annotations_post;
  std::filesystem::path output_dir;

  std::map<std::string, nlohmann::json> backends;  // synthesizer, judge, eval

  std::uint64_t rng_seed = 0;
  double fraction = 0.1;
  int blank_width = 336;
  int blank_height = 336;
  std::size_t max_in_flight = 8;
  bool include_control_tokens = false;
};

/// Throws ConfigInvalid / FileMissing.
PipelineConfig load_config(const std::filesystem::path& path);

/// Runs one invocation, e.g. {"visynth", "filter", "--config", "c.json"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Conservation checks across the stage sections of a pipeline manifest.
/// Returns one message per violated invariant.
std::vector<std::string> manifest_violations(const nlohmann::json& manifest);

/// Golden renderings keyed by file name: the synthesizer-tuning format with
/// placeholder fields, its loss mask marked with << >>, and the builtin
/// evaluation templates.
std::map<std::string, std::string> golden_files(const ChatTemplate& tmpl);

}  // namespace visynth::cli
