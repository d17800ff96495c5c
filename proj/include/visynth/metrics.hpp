// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace visynth {

/// Lowercase, drop ASCII punctuation, split on whitespace.
std::vector<std::string> normalize_tokens(std::string_view text);

/// |unique gold tokens found in prediction| / |unique gold tokens|.
double score_token_recall(std::string_view prediction, std::string_view gold);

/// 1 when the first standalone "yes"/"no" token of the prediction equals gold.
/// Throws InvalidArgument when gold is not yes or no.
double score_closed_accuracy(std::string_view prediction, std::string_view gold);

/// Index of the option the prediction selects, or -1 when it selects none or
/// is ambiguous. A leading option letter ("B", "(B)", "B.", "B: ...") and
/// whole-word option text both count; an option whose text lies inside
/// another matched option's text is ignored.
int match_choice(std::string_view prediction, std::span<const std::string> options);

/// 1 iff match_choice selects gold_option. An empty option list means the gold
/// option is the only candidate. Throws InvalidArgument when gold is not an option.
double score_choice_accuracy(std::string_view prediction, std::span<const std::string> options,
                             std::string_view gold_option);

/// Length of the longest common subsequence (rolling-row dynamic programming).
template <class T>
std::size_t lcs_length(std::span<const T> a, std::span<const T> b) {
  if (a.empty() || b.empty()) return 0;
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// F = 2PR / (P + R) with P = lcs / n_pred and R = lcs / n_gold; 0 when empty.
double rouge_l_f(std::size_t lcs, std::size_t n_pred, std::size_t n_gold);

template <class T>
double rouge_l_tokens(std::span<const T> prediction, std::span<const T> gold) {
  return rouge_l_f(lcs_length(prediction, gold), prediction.size(), gold.size());
}

double score_rouge_l(std::string_view prediction, std::string_view gold);

/// Lowercased, whitespace-collapsed label.
std::string normalize_label(std::string_view label);

/// Bracketed comma-separated list if present, otherwise the universe members
/// mentioned in the prediction.
std::set<std::string> parse_label_list(std::string_view prediction, std::span<const std::string> universe);

/// 2|P ∩ G| / (|P| + |G|).
double score_multilabel_f1(std::string_view prediction, std::span<const std::string> gold_labels,
                           std::span<const std::string> universe);

}  // namespace visynth
