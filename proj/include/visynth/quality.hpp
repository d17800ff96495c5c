// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "visynth/filterkit.hpp"

namespace visynth {

inline constexpr std::size_t kTaskTypeCount = 20;

/// Common vision-instruction task types used for diversity annotation, in
/// canonical order.
const std::array<std::string_view, kTaskTypeCount>& task_type_taxonomy();
bool is_task_type(std::string_view name);

/// Human scores for one synthetic sample. Likert fields are in 1..5.
struct QualityAnnotation {
  std::string sample_id;
  std::string task_type;
  int knowledge = 1;
  int complexity = 1;
  int accuracy = 1;
  bool operator==(const QualityAnnotation&) const = default;
};

/// Throws OutOfRange for Likert values outside 1..5 and InvalidArgument for
/// unknown task types.
void validate(const QualityAnnotation& a);
void to_json(nlohmann::json& j, const QualityAnnotation& a);
void from_json(const nlohmann::json& j, QualityAnnotation& a);

/// 100 * distinct task types / 20. Throws EmptyAnnotations.
double diversity_score(std::span<const QualityAnnotation> annotations);

/// 100 * (mean - 1) / 4. Throws EmptyAnnotations or OutOfRange.
double rescale_likert(std::span<const int> scores);

struct QualitySummary {
  std::size_t n = 0;
  double diversity = 0.0;
  double knowledge = 0.0;
  double complexity = 0.0;
  double accuracy = 0.0;
};

QualitySummary summarize_quality(std::span<const QualityAnnotation> annotations);
void to_json(nlohmann::json& j, const QualitySummary& s);
/// Columns: Diversity, Knowledge, Complexity, Accuracy.
std::string format_quality_table(std::span<const std::pair<std::string, QualitySummary>> rows);

/// Counts per taxonomy category, in taxonomy order.
struct TaskTypeHistogram {
  std::vector<std::pair<std::string, std::size_t>> bins;
  std::size_t total() const;
  bool operator==(const TaskTypeHistogram&) const = default;
};

TaskTypeHistogram task_type_distribution(std::span<const QualityAnnotation> annotations);
void to_json(nlohmann::json& j, const TaskTypeHistogram& h);
void from_json(const nlohmann::json& j, TaskTypeHistogram& h);

/// Human judgement of one triplet's responses, used for filter-quality reports.
struct FilterAnnotation {
  std::string sample_id;
  bool consistent = false;         // precise and informative responses agree
  bool precise_correct = false;
  bool informative_correct = false;
  std::optional<bool> combined_correct;  // the assembled CoT response
  std::optional<ConsistencyLabel> judge_label;
};

void to_json(nlohmann::json& j, const FilterAnnotation& a);
void from_json(const nlohmann::json& j, FilterAnnotation& a);

struct FilterQualityReport {
  std::size_t pre_n = 0;
  double pre_consistency = 0.0;
  double pre_precise_acc = 0.0;
  double pre_informative_acc = 0.0;
  std::size_t post_n = 0;
  double post_consistency = 0.0;
  double post_acc = 0.0;
};

/// Percentages over each set with its own denominator. The post-filter
/// accuracy reads combined_correct, falling back to precise_correct.
/// Throws EmptyAnnotations when either set is empty.
FilterQualityReport filter_quality_report(std::span<const FilterAnnotation> pre_filter,
                                          std::span<const FilterAnnotation> post_filter);
void to_json(nlohmann::json& j, const FilterQualityReport& r);
/// "w/o Filter: Consist., Precise Acc, Info. Acc | w/ Filter: Consist., Acc", one decimal.
std::string format_filter_quality_table(std::span<const std::pair<std::string, FilterQualityReport>> rows);

}  // namespace visynth
