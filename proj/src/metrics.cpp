// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "visynth/metrics.hpp"

#include <cctype>
#include <regex>
#include <unordered_set>

#include "visynth/error.hpp"
#include "visynth/text.hpp"

namespace visynth {
namespace {

bool contains_run(std::span<const std::string> haystack, std::span<const std::string> needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

/// Indices of candidates whose token runs occur in `tokens`, minus those
/// subsumed by another matched candidate.
std::vector<std::size_t> mentioned(std::span<const std::string> tokens,
                                   const std::vector<std::vector<std::string>>& candidates) {
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (contains_run(tokens, candidates[i])) hits.push_back(i);
  }
  std::vector<std::size_t> out;
  for (auto i : hits) {
    bool subsumed = false;
    for (auto j : hits) {
      if (i != j && candidates[j].size() > candidates[i].size() && contains_run(candidates[j], candidates[i])) {
        subsumed = true;
        break;
      }
    }
    if (!subsumed) out.push_back(i);
  }
  return out;
}

}  // namespace

std::vector<std::string> normalize_tokens(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) continue;
    cleaned += static_cast<char>(u < 0x80 ? std::tolower(u) : u);
  }
  return text::split_whitespace(cleaned);
}

double score_token_recall(std::string_view prediction, std::string_view gold) {
  const auto gold_tokens = normalize_tokens(gold);
  const std::unordered_set<std::string> gold_set(gold_tokens.begin(), gold_tokens.end());
  if (gold_set.empty()) return 0.0;
  const auto pred_tokens = normalize_tokens(prediction);
  const std::unordered_set<std::string> pred_set(pred_tokens.begin(), pred_tokens.end());
  std::size_t hit = 0;
  for (const auto& t : gold_set) hit += pred_set.count(t);
  return static_cast<double>(hit) / static_cast<double>(gold_set.size());
}

double score_closed_accuracy(std::string_view prediction, std::string_view gold) {
  const auto g = normalize_tokens(gold);
  if (g.size() != 1 || (g[0] != "yes" && g[0] != "no"))
    throw Error(ErrorCode::InvalidArgument, std::string(gold), "closed-form gold must be yes or no");
  for (const auto& t : normalize_tokens(prediction)) {
    if (t == "yes" || t == "no") return t == g[0] ? 1.0 : 0.0;
  }
  return 0.0;
}

int match_choice(std::string_view prediction, std::span<const std::string> options) {
  std::set<int> candidates;

  static const std::regex letter_re(R"(^\(?([A-Z])(?:[\)\.:,]?$|[\)\.:]\s))");
  const std::string trimmed(text::trim(prediction));
  std::smatch m;
  if (options.size() <= 26 && std::regex_search(trimmed, m, letter_re)) {
    const int idx = m[1].str()[0] - 'A';
    if (idx < static_cast<int>(options.size())) candidates.insert(idx);
  }

  std::vector<std::vector<std::string>> option_tokens;
  option_tokens.reserve(options.size());
  for (const auto& o : options) option_tokens.push_back(normalize_tokens(o));
  const auto pred_tokens = normalize_tokens(prediction);
  for (auto i : mentioned(pred_tokens, option_tokens)) candidates.insert(static_cast<int>(i));

  return candidates.size() == 1 ? *candidates.begin() : -1;
}

double score_choice_accuracy(std::string_view prediction, std::span<const std::string> options,
                             std::string_view gold_option) {
  std::vector<std::string> fallback;
  if (options.empty()) {
    fallback.emplace_back(gold_option);
    options = fallback;
  }
  const auto gold_it = std::find(options.begin(), options.end(), gold_option);
  if (gold_it == options.end())
    throw Error(ErrorCode::InvalidArgument, std::string(gold_option), "gold option is not among the options");
  const int chosen = match_choice(prediction, options);
  return chosen >= 0 && options[static_cast<std::size_t>(chosen)] == gold_option ? 1.0 : 0.0;
}

double rouge_l_f(std::size_t lcs, std::size_t n_pred, std::size_t n_gold) {
  if (lcs == 0 || n_pred == 0 || n_gold == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(n_pred);
  const double r = static_cast<double>(lcs) / static_cast<double>(n_gold);
  return 2.0 * p * r / (p + r);
}

double score_rouge_l(std::string_view prediction, std::string_view gold) {
  const auto p = normalize_tokens(prediction);
  const auto g = normalize_tokens(gold);
  return rouge_l_tokens<std::string>(p, g);
}

std::string normalize_label(std::string_view label) {
  return text::join(text::split_whitespace(text::to_lower_ascii(label)), " ");
}

std::set<std::string> parse_label_list(std::string_view prediction, std::span<const std::string> universe) {
  std::set<std::string> out;
  const auto open = prediction.find('[');
  const auto close = open == std::string_view::npos ? open : prediction.find(']', open);
  if (close != std::string_view::npos) {
    const auto body = prediction.substr(open + 1, close - open - 1);
    std::size_t begin = 0;
    while (begin <= body.size()) {
      auto end = body.find(',', begin);
      if (end == std::string_view::npos) end = body.size();
      auto item = text::trim(body.substr(begin, end - begin));
      while (!item.empty() && (item.front() == '"' || item.front() == '\'')) item.remove_prefix(1);
      while (!item.empty() && (item.back() == '"' || item.back() == '\'')) item.remove_suffix(1);
      if (auto label = normalize_label(item); !label.empty()) out.insert(std::move(label));
      begin = end + 1;
    }
    return out;
  }
  std::vector<std::vector<std::string>> universe_tokens;
  for (const auto& u : universe) universe_tokens.push_back(normalize_tokens(u));
  for (auto i : mentioned(normalize_tokens(prediction), universe_tokens)) out.insert(normalize_label(universe[i]));
  return out;
}

double score_multilabel_f1(std::string_view prediction, std::span<const std::string> gold_labels,
                           std::span<const std::string> universe) {
  std::set<std::string> gold;
  for (const auto& g : gold_labels) gold.insert(normalize_label(g));
  const auto predicted = parse_label_list(prediction, universe);
  if (gold.empty() && predicted.empty()) return 0.0;
  std::size_t both = 0;
  for (const auto& p : predicted) both += gold.count(p);
  return 2.0 * static_cast<double>(both) / static_cast<double>(predicted.size() + gold.size());
}

}  // namespace visynth
