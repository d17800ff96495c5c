// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "visynth/backends.hpp"
#include "visynth/corpus.hpp"

namespace visynth {

enum class ConsistencyLabel { Consistent, Inconsistent, Open };

std::string_view to_string(ConsistencyLabel label);

/// Default judge prompt. Placeholders: {instruction}, {precise_response},
/// {informative_response}.
extern const std::string kDefaultConsistencyPrompt;

/// Fills the judge prompt. Substitution is single-pass, so placeholder-like
/// text inside the triplet is left alone. Throws TemplateInvalid when the
/// template lacks one of the three placeholders.
std::string build_consistency_prompt(const TaskTriplet& triplet,
                                     std::string_view prompt_template = kDefaultConsistencyPrompt);

/// Reads the label from the final non-empty line, case-insensitively, on word
/// boundaries. Throws NoLabelFound or AmbiguousLabel.
ConsistencyLabel parse_consistency_label(std::string_view raw);

struct FilterStats {
  std::size_t total = 0;
  std::size_t consistent = 0;
  std::size_t inconsistent = 0;
  std::size_t open = 0;
  std::size_t judge_failures = 0;
  double retention_rate = 0.0;
  bool operator==(const FilterStats&) const = default;
};

void to_json(nlohmann::json& j, const FilterStats& s);
void from_json(const nlohmann::json& j, FilterStats& s);
std::string format_filter_stats_table(const FilterStats& s, std::string_view row_label = "all");

struct FilterOptions {
  std::string prompt_template = kDefaultConsistencyPrompt;
  int max_new_tokens = 256;
  double temperature = 0.0;
};

struct FilterResult {
  std::vector<TaskTriplet> kept;
  std::vector<std::size_t> kept_indices;
  std::vector<std::optional<ConsistencyLabel>> labels;  // nullopt: judge failure
  FilterStats stats;
};

/// One judge call per triplet; keeps the Consistent ones in input order.
FilterResult filter_triplets(std::span<const TaskTriplet> triplets, ChatBackend& judge, std::size_t max_in_flight,
                             const FilterOptions& options = {});

inline const std::string kDefaultCotConnective = "\n\nTherefore, the answer is: ";

struct CotTask {
  std::string instruction;
  std::string response;
  TaskTriplet source_triplet;
  bool operator==(const CotTask&) const = default;
};

void to_json(nlohmann::json& j, const CotTask& t);
void from_json(const nlohmann::json& j, CotTask& t);

/// response = informative + connective + precise.
CotTask assemble_cot(const TaskTriplet& triplet, std::string_view connective = kDefaultCotConnective);

/// Splits at the first occurrence of the connective.
std::optional<std::pair<std::string, std::string>> split_cot(std::string_view response,
                                                             std::string_view connective = kDefaultCotConnective);

}  // namespace visynth
