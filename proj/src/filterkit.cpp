// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "visynth/filterkit.hpp"

#include <array>
#include <cctype>
#include <iomanip>
#include <set>
#include <sstream>

#include "visynth/error.hpp"
#include "visynth/parallel.hpp"
#include "visynth/text.hpp"

namespace visynth {
namespace {

constexpr std::array<std::string_view, 3> kPlaceholders = {"{instruction}", "{precise_response}",
                                                           "{informative_response}"};

}  // namespace

const std::string kDefaultConsistencyPrompt =
    "You are given an instruction about an image together with two responses written for it: "
    "a precise response (a short final answer) and an informative response (a detailed answer "
    "with reasoning).\n"
    "\n"
    "Instruction: {instruction}\n"
    "Precise response: {precise_response}\n"
    "Informative response: {informative_response}\n"
    "\n"
    "Classify the pair into exactly one category:\n"
    "- consistent: the precise response agrees with the conclusion of the informative response.\n"
    "- inconsistent: the precise response contradicts or does not match the informative response.\n"
    "- open: the instruction asks for an open-ended answer (for example background information or a "
    "free description), so the two responses cannot be checked against each other.\n"
    "\n"
    "You may reason briefly first. On the final line, write only one word: consistent, inconsistent, or open.";

std::string_view to_string(ConsistencyLabel label) {
  switch (label) {
    case ConsistencyLabel::Consistent: return "consistent";
    case ConsistencyLabel::Inconsistent: return "inconsistent";
    case ConsistencyLabel::Open: return "open";
  }
  return "open";
}

std::string build_consistency_prompt(const TaskTriplet& triplet, std::string_view prompt_template) {
  for (auto ph : kPlaceholders) {
    if (prompt_template.find(ph) == std::string_view::npos)
      throw Error(ErrorCode::TemplateInvalid, std::string(ph), "judge prompt lacks placeholder " + std::string(ph));
  }
  const std::array<const std::string*, 3> values = {&triplet.instruction, &triplet.precise_response,
                                                    &triplet.informative_response};
  std::string out;
  std::size_t pos = 0;
  while (pos < prompt_template.size()) {
    std::size_t best = std::string_view::npos;
    std::size_t which = 0;
    for (std::size_t k = 0; k < kPlaceholders.size(); ++k) {
      const auto at = prompt_template.find(kPlaceholders[k], pos);
      if (at < best) {
        best = at;
        which = k;
      }
    }
    if (best == std::string_view::npos) {
      out.append(prompt_template.substr(pos));
      break;
    }
    out.append(prompt_template.substr(pos, best - pos));
    out += *values[which];
    pos = best + kPlaceholders[which].size();
  }
  return out;
}

ConsistencyLabel parse_consistency_label(std::string_view raw) {
  std::string_view last_line;
  std::size_t begin = 0;
  while (begin <= raw.size()) {
    auto end = raw.find('\n', begin);
    if (end == std::string_view::npos) end = raw.size();
    const auto line = raw.substr(begin, end - begin);
    if (!text::is_blank(line)) last_line = line;
    begin = end + 1;
  }
  if (last_line.empty()) throw Error(ErrorCode::NoLabelFound, "judge output is empty");

  std::set<ConsistencyLabel> found;
  std::optional<ConsistencyLabel> last;
  std::string word;
  auto flush = [&] {
    if (word == "consistent") last = ConsistencyLabel::Consistent;
    else if (word == "inconsistent") last = ConsistencyLabel::Inconsistent;
    else if (word == "open") last = ConsistencyLabel::Open;
    else { word.clear(); return; }
    found.insert(*last);
    word.clear();
  };
  for (char c : last_line) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();

  if (found.size() > 1)
    throw Error(ErrorCode::AmbiguousLabel, std::string(last_line), "ambiguous label line: " + std::string(last_line));
  if (!last) throw Error(ErrorCode::NoLabelFound, std::string(last_line), "no label in: " + std::string(last_line));
  return *last;
}

void to_json(nlohmann::json& j, const FilterStats& s) {
  j = {{"total", s.total},
       {"consistent", s.consistent},
       {"inconsistent", s.inconsistent},
       {"open", s.open},
       {"judge_failures", s.judge_failures},
       {"retention_rate", s.retention_rate}};
}

void from_json(const nlohmann::json& j, FilterStats& s) {
  s.total = j.at("total").get<std::size_t>();
  s.consistent = j.at("consistent").get<std::size_t>();
  s.inconsistent = j.at("inconsistent").get<std::size_t>();
  s.open = j.at("open").get<std::size_t>();
  s.judge_failures = j.at("judge_failures").get<std::size_t>();
  s.retention_rate = j.at("retention_rate").get<double>();
}

std::string format_filter_stats_table(const FilterStats& s, std::string_view row_label) {
  auto pct = [&](std::size_t n) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << (s.total ? 100.0 * static_cast<double>(n) / static_cast<double>(s.total) : 0.0);
    return os.str();
  };
  std::ostringstream os;
  os << std::left << std::setw(10) << "" << std::right << std::setw(8) << "Total" << std::setw(10) << "Consist."
     << std::setw(12) << "Inconsist." << std::setw(8) << "Open" << std::setw(10) << "Failures" << std::setw(8)
     << "Acc" << std::setw(12) << "Retention" << '\n';
  os << std::left << std::setw(10) << row_label << std::right << std::setw(8) << s.total << std::setw(10)
     << pct(s.consistent) << std::setw(12) << pct(s.inconsistent) << std::setw(8) << pct(s.open) << std::setw(10)
     << pct(s.judge_failures) << std::setw(8) << "-" << std::setw(12) << std::fixed << std::setprecision(3)
     << s.retention_rate << '\n';
  return os.str();
}

FilterResult filter_triplets(std::span<const TaskTriplet> triplets, ChatBackend& judge, std::size_t max_in_flight,
                             const FilterOptions& options) {
  // Surface template problems once rather than as per-item judge failures.
  if (!triplets.empty()) (void)build_consistency_prompt(triplets.front(), options.prompt_template);

  auto labels = ordered_parallel_map(triplets.size(), max_in_flight,
                                     [&](std::size_t i) -> std::optional<ConsistencyLabel> {
                                       ChatRequest req;
                                       req.messages.push_back(
                                           {MessageRole::User,
                                            build_consistency_prompt(triplets[i], options.prompt_template),
                                            std::nullopt});
                                       req.max_new_tokens = options.max_new_tokens;
                                       req.temperature = options.temperature;
                                       try {
                                         return parse_consistency_label(judge.complete(req));
                                       } catch (const std::exception&) {
                                         return std::nullopt;
                                       }
                                     });

  FilterResult out;
  out.stats.total = triplets.size();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) {
      ++out.stats.judge_failures;
      continue;
    }
    switch (*labels[i]) {
      case ConsistencyLabel::Consistent:
        ++out.stats.consistent;
        out.kept.push_back(triplets[i]);
        out.kept_indices.push_back(i);
        break;
      case ConsistencyLabel::Inconsistent: ++out.stats.inconsistent; break;
      case ConsistencyLabel::Open: ++out.stats.open; break;
    }
  }
  out.stats.retention_rate =
      out.stats.total ? static_cast<double>(out.stats.consistent) / static_cast<double>(out.stats.total) : 0.0;
  out.labels = std::move(labels);
  return out;
}

void to_json(nlohmann::json& j, const CotTask& t) {
  j = {{"instruction", t.instruction}, {"response", t.response}, {"source_triplet", t.source_triplet}};
}

void from_json(const nlohmann::json& j, CotTask& t) {
  t.instruction = j.at("instruction").get<std::string>();
  t.response = j.at("response").get<std::string>();
  t.source_triplet = j.at("source_triplet").get<TaskTriplet>();
}

CotTask assemble_cot(const TaskTriplet& triplet, std::string_view connective) {
  CotTask task;
  task.instruction = triplet.instruction;
  task.response.reserve(triplet.informative_response.size() + connective.size() + triplet.precise_response.size());
  task.response += triplet.informative_response;
  task.response += connective;
  task.response += triplet.precise_response;
  task.source_triplet = triplet;
  return task;
}

std::optional<std::pair<std::string, std::string>> split_cot(std::string_view response, std::string_view connective) {
  const auto at = response.find(connective);
  if (at == std::string_view::npos) return std::nullopt;
  return std::make_pair(std::string(response.substr(0, at)), std::string(response.substr(at + connective.size())));
}

}  // namespace visynth
