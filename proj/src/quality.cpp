// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "visynth/quality.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "visynth/error.hpp"

namespace visynth {
namespace {

double percent(std::size_t hits, std::size_t n) {
  return n ? 100.0 * static_cast<double>(hits) / static_cast<double>(n) : 0.0;
}

void check_likert(int v, const char* field) {
  if (v < 1 || v > 5)
    throw Error(ErrorCode::OutOfRange, field, std::string(field) + " must be in 1..5, got " + std::to_string(v));
}

std::optional<ConsistencyLabel> label_from_string(const std::string& s) {
  if (s == "consistent") return ConsistencyLabel::Consistent;
  if (s == "inconsistent") return ConsistencyLabel::Inconsistent;
  if (s == "open") return ConsistencyLabel::Open;
  throw Error(ErrorCode::RecordInvalid, s, "unknown judge label '" + s + "'");
}

}  // namespace

const std::array<std::string_view, kTaskTypeCount>& task_type_taxonomy() {
  static const std::array<std::string_view, kTaskTypeCount> kTaxonomy = {
      "Domain Classification",
      "Object Recognition",
      "Pose and Activity Recognition",
      "Logo Detection",
      "Face and Expression Classification",
      "Scene Classification",
      "Sentiment Analysis",
      "Caption Generation",
      "Text Detection and OCR",
      "Image-Text Matching",
      "Anomaly Detection",
      "Style Classification",
      "Attribute and Context Recognition",
      "Task-Oriented Image Recognition",
      "Step-by-Step Guidance",
      "Data Representation and Visualization",
      "Utility and Affordance Recognition",
      "Visual Grounding",
      "Segmentation",
      "Visual Storytelling",
  };
  return kTaxonomy;
}

bool is_task_type(std::string_view name) {
  const auto& t = task_type_taxonomy();
  return std::find(t.begin(), t.end(), name) != t.end();
}

void validate(const QualityAnnotation& a) {
  if (!is_task_type(a.task_type))
    throw Error(ErrorCode::InvalidArgument, a.task_type, "unknown task type '" + a.task_type + "'");
  check_likert(a.knowledge, "knowledge");
  check_likert(a.complexity, "complexity");
  check_likert(a.accuracy, "accuracy");
}

void to_json(nlohmann::json& j, const QualityAnnotation& a) {
  j = {{"sample_id", a.sample_id},
       {"task_type", a.task_type},
       {"knowledge", a.knowledge},
       {"complexity", a.complexity},
       {"accuracy", a.accuracy}};
}

void from_json(const nlohmann::json& j, QualityAnnotation& a) {
  a.sample_id = j.at("sample_id").get<std::string>();
  a.task_type = j.at("task_type").get<std::string>();
  a.knowledge = j.at("knowledge").get<int>();
  a.complexity = j.at("complexity").get<int>();
  a.accuracy = j.at("accuracy").get<int>();
  validate(a);
}

double diversity_score(std::span<const QualityAnnotation> annotations) {
  if (annotations.empty()) throw Error(ErrorCode::EmptyAnnotations, "no annotations");
  std::set<std::string_view> distinct;
  for (const auto& a : annotations) {
    if (!is_task_type(a.task_type))
      throw Error(ErrorCode::InvalidArgument, a.task_type, "unknown task type '" + a.task_type + "'");
    distinct.insert(a.task_type);
  }
  return 100.0 * static_cast<double>(distinct.size()) / static_cast<double>(kTaskTypeCount);
}

double rescale_likert(std::span<const int> scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyAnnotations, "no scores");
  long sum = 0;
  for (int s : scores) {
    check_likert(s, "score");
    sum += s;
  }
  const double mean = static_cast<double>(sum) / static_cast<double>(scores.size());
  return 100.0 * (mean - 1.0) / 4.0;
}

QualitySummary summarize_quality(std::span<const QualityAnnotation> annotations) {
  QualitySummary s;
  s.n = annotations.size();
  s.diversity = diversity_score(annotations);
  std::vector<int> knowledge, complexity, accuracy;
  for (const auto& a : annotations) {
    knowledge.push_back(a.knowledge);
    complexity.push_back(a.complexity);
    accuracy.push_back(a.accuracy);
  }
  s.knowledge = rescale_likert(knowledge);
  s.complexity = rescale_likert(complexity);
  s.accuracy = rescale_likert(accuracy);
  return s;
}

void to_json(nlohmann::json& j, const QualitySummary& s) {
  j = {{"n", s.n},
       {"diversity", s.diversity},
       {"knowledge", s.knowledge},
       {"complexity", s.complexity},
       {"accuracy", s.accuracy}};
}

std::string format_quality_table(std::span<const std::pair<std::string, QualitySummary>> rows) {
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.first.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width) + 2) << "" << std::right << std::setw(11) << "Diversity"
     << std::setw(11) << "Knowledge" << std::setw(12) << "Complexity" << std::setw(10) << "Accuracy" << '\n';
  os << std::fixed << std::setprecision(1);
  for (const auto& [label, s] : rows) {
    os << std::left << std::setw(static_cast<int>(width) + 2) << label << std::right << std::setw(11) << s.diversity
       << std::setw(11) << s.knowledge << std::setw(12) << s.complexity << std::setw(10) << s.accuracy << '\n';
  }
  return os.str();
}

std::size_t TaskTypeHistogram::total() const {
  std::size_t n = 0;
  for (const auto& b : bins) n += b.second;
  return n;
}

TaskTypeHistogram task_type_distribution(std::span<const QualityAnnotation> annotations) {
  TaskTypeHistogram h;
  for (auto name : task_type_taxonomy()) h.bins.emplace_back(std::string(name), 0);
  for (const auto& a : annotations) {
    const auto it = std::find_if(h.bins.begin(), h.bins.end(), [&](const auto& b) { return b.first == a.task_type; });
    if (it == h.bins.end())
      throw Error(ErrorCode::InvalidArgument, a.task_type, "unknown task type '" + a.task_type + "'");
    ++it->second;
  }
  return h;
}

void to_json(nlohmann::json& j, const TaskTypeHistogram& h) {
  j = nlohmann::json::array();
  for (const auto& [name, count] : h.bins) j.push_back({{"task_type", name}, {"count", count}});
}

void from_json(const nlohmann::json& j, TaskTypeHistogram& h) {
  h.bins.clear();
  for (const auto& row : j) h.bins.emplace_back(row.at("task_type").get<std::string>(), row.at("count").get<std::size_t>());
}

void to_json(nlohmann::json& j, const FilterAnnotation& a) {
  j = {{"sample_id", a.sample_id},
       {"consistent", a.consistent},
       {"precise_correct", a.precise_correct},
       {"informative_correct", a.informative_correct}};
  if (a.combined_correct) j["combined_correct"] = *a.combined_correct;
  if (a.judge_label) j["judge_label"] = to_string(*a.judge_label);
}

void from_json(const nlohmann::json& j, FilterAnnotation& a) {
  a.sample_id = j.at("sample_id").get<std::string>();
  a.consistent = j.at("consistent").get<bool>();
  a.precise_correct = j.at("precise_correct").get<bool>();
  a.informative_correct = j.at("informative_correct").get<bool>();
  a.combined_correct.reset();
  if (j.contains("combined_correct") && j["combined_correct"].is_boolean()) a.combined_correct = j["combined_correct"].get<bool>();
  a.judge_label.reset();
  if (j.contains("judge_label") && j["judge_label"].is_string()) a.judge_label = label_from_string(j["judge_label"].get<std::string>());
}

FilterQualityReport filter_quality_report(std::span<const FilterAnnotation> pre_filter,
                                          std::span<const FilterAnnotation> post_filter) {
  if (pre_filter.empty() || post_filter.empty())
    throw Error(ErrorCode::EmptyAnnotations, "filter quality report needs both annotation sets");
  FilterQualityReport r;
  r.pre_n = pre_filter.size();
  std::size_t consistent = 0, precise = 0, informative = 0;
  for (const auto& a : pre_filter) {
    consistent += a.consistent;
    precise += a.precise_correct;
    informative += a.informative_correct;
  }
  r.pre_consistency = percent(consistent, r.pre_n);
  r.pre_precise_acc = percent(precise, r.pre_n);
  r.pre_informative_acc = percent(informative, r.pre_n);

  r.post_n = post_filter.size();
  std::size_t post_consistent = 0, post_correct = 0;
  for (const auto& a : post_filter) {
    post_consistent += a.consistent;
    post_correct += a.combined_correct.value_or(a.precise_correct);
  }
  r.post_consistency = percent(post_consistent, r.post_n);
  r.post_acc = percent(post_correct, r.post_n);
  return r;
}

void to_json(nlohmann::json& j, const FilterQualityReport& r) {
  j = {{"without_filter",
        {{"n", r.pre_n},
         {"consistency", r.pre_consistency},
         {"precise_acc", r.pre_precise_acc},
         {"informative_acc", r.pre_informative_acc}}},
       {"with_filter", {{"n", r.post_n}, {"consistency", r.post_consistency}, {"acc", r.post_acc}}}};
}

std::string format_filter_quality_table(std::span<const std::pair<std::string, FilterQualityReport>> rows) {
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.first.size());
  const int w = static_cast<int>(width) + 2;
  std::ostringstream os;
  os << std::left << std::setw(w) << "" << std::setw(35) << "w/o Filter" << "w/ Filter" << '\n';
  os << std::left << std::setw(w) << "" << std::right << std::setw(9) << "Consist." << std::setw(14) << "Precise Acc"
     << std::setw(12) << "Info. Acc" << std::setw(11) << "Consist." << std::setw(8) << "Acc" << '\n';
  os << std::fixed << std::setprecision(1);
  for (const auto& [label, r] : rows) {
    os << std::left << std::setw(w) << label << std::right << std::setw(9) << r.pre_consistency << std::setw(14)
       << r.pre_precise_acc << std::setw(12) << r.pre_informative_acc << std::setw(11) << r.post_consistency
       << std::setw(8) << r.post_acc << '\n';
  }
  return os.str();
}

}  // namespace visynth
