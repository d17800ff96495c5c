// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "visynth/backends.hpp"
#include "visynth/corpus.hpp"

namespace visynth {

enum class Metric { TokenRecall, ClosedAccuracy, ChoiceAccuracy, RougeL, MultiLabelF1 };

std::string_view to_string(Metric m);
Metric metric_from_string(std::string_view s);

/// How an options list is rendered into the options placeholder.
enum class OptionStyle {
  Plain,     // "a, b, c"
  Lettered,  // "A: a, B: b, C: c"
};

struct EvalTaskSpec {
  std::string name;
  std::string prompt_template;  // "{name}" placeholders; names may contain spaces
  Metric metric = Metric::TokenRecall;
  std::optional<std::string> options_field;
  OptionStyle option_style = OptionStyle::Plain;
  bool operator==(const EvalTaskSpec&) const = default;
};

/// Placeholder names in order of first appearance.
std::vector<std::string> template_placeholders(std::string_view prompt_template);

void to_json(nlohmann::json& j, const EvalTaskSpec& s);
void from_json(const nlohmann::json& j, EvalTaskSpec& s);

/// Zero-shot task templates for the biomedicine, food and remote-sensing suites.
std::vector<EvalTaskSpec> builtin_eval_tasks();
std::vector<EvalTaskSpec> load_eval_tasks(const std::filesystem::path& path);
/// Throws InvalidArgument listing the available names.
const EvalTaskSpec& find_task(std::span<const EvalTaskSpec> tasks, std::string_view name);

struct EvalInstance {
  std::string id;
  ImageRef image;
  std::map<std::string, std::string> fields;
  std::vector<std::string> gold;
  std::vector<std::string> options;
  bool operator==(const EvalInstance&) const = default;
};

void to_json(nlohmann::json& j, const EvalInstance& i);
void from_json(const nlohmann::json& j, EvalInstance& i);
LoadResult<EvalInstance> load_eval_instances(const std::filesystem::path& path,
                                             std::optional<std::size_t> limit = std::nullopt);

struct EvalOptions {
  int max_new_tokens = 512;
  double temperature = 0.0;
};

/// Single user message carrying the image and the filled template. The
/// options placeholder falls back to the instance's option list.
/// Throws MissingPlaceholder(name).
ChatRequest render_eval_prompt(const EvalTaskSpec& spec, const EvalInstance& instance,
                               const EvalOptions& options = {});

/// Metric value in [0, 1] for one prediction.
double score_prediction(const EvalTaskSpec& spec, const EvalInstance& instance, std::string_view prediction);

struct InstanceScore {
  std::string id;
  double score = 0.0;  // [0, 1]
  std::string prediction;
  bool failed = false;
  std::string error;
};

struct ScoreReport {
  std::string task_name;
  std::size_t n = 0;
  double mean_score = 0.0;  // 0-100
  std::vector<InstanceScore> per_instance;
  std::size_t failures = 0;
};

void to_json(nlohmann::json& j, const InstanceScore& s);
/// Summary only; per-instance rows are written separately.
void to_json(nlohmann::json& j, const ScoreReport& r);

/// Scores every instance in input order. Backend failures score 0 and are flagged.
ScoreReport run_eval(const EvalTaskSpec& spec, std::span<const EvalInstance> instances, ChatBackend& backend,
                     std::size_t max_in_flight, const EvalOptions& options = {});

/// Aligned table, one decimal place.
std::string format_score_table(std::span<const ScoreReport> reports);

}  // namespace visynth
