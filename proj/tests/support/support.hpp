// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures for unit and acceptance tests: temp directories, random
// valid triplets, toy corpora and scripted backend rules.

#pragma once

#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visynth/backends.hpp"
#include "visynth/chat_template.hpp"
#include "visynth/corpus.hpp"
#include "visynth/filterkit.hpp"
#include "visynth/rng.hpp"
#include "visynth/seedkit.hpp"
#include "visynth/text.hpp"

namespace visynth::testing {

class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    SplitMix64 rng(static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)) ^ ++counter ^
                   static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()));
    path_ = std::filesystem::temp_directory_path() / ("visynth-test-" + text::hex64(rng.next()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = {
      "lung",   "lesion",   "opacity", "left",   "right",  "the",     "a",       "of",     "is",
      "shows",  "image",    "x-ray",   "mri",    "tissue", "cell",    "tumour",  "dish",   "noodle",
      "salad",  "calories", "grams",   "river",  "flood",  "road",    "roof",    "field",  "42",
      "3.5",    "(b)",      "yes",     "no",     "what",   "which",   "how",     "many",   "where",
      "café",   "naïve",    "肺",      "食物",   "région", "50%",     "e.g.",    "i.e.,",  "mg/dL",
      "\"q\"",  "it's",     "--",      "+/-",    "#3",     "answer",  "response", "precise", "informative"};
  return words;
}

inline std::string random_phrase(SplitMix64& rng, std::size_t min_words, std::size_t max_words,
                                 bool allow_newlines = false) {
  const auto& vocab = vocabulary();
  const auto n = min_words + rng.below(max_words - min_words + 1);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const auto r = rng.below(20);
      out += (allow_newlines && r == 0) ? "\n" : (r == 1 ? ", " : " ");
    }
    out += vocab[rng.below(vocab.size())];
  }
  return out;
}

/// A valid triplet: trimmed, non-empty fields that avoid the fixed markers,
/// role prefixes and the CoT connective. `tag` makes the instruction unique.
inline TaskTriplet random_triplet(SplitMix64& rng, const std::string& tag = {}) {
  TaskTriplet t;
  t.instruction = random_phrase(rng, 2, 14) + "?" + (tag.empty() ? "" : " [" + tag + "]");
  t.informative_response = random_phrase(rng, 5, 60, true) + ".";
  t.precise_response = random_phrase(rng, 1, 4);
  return t;
}

inline std::string pair_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%05zu", i);
  return buf;
}

inline std::vector<ImageCaptionPair> toy_pairs(std::size_t n) {
  std::vector<ImageCaptionPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = pair_id(i);
    SplitMix64 rng(text::fnv1a64(id));
    out.push_back({id, ImageRef::file("images/" + id + ".png"), "Caption " + id + ": " + random_phrase(rng, 4, 20),
                   std::nullopt});
  }
  return out;
}

/// The triplet the scripted synthesizer returns for a pair.
inline TaskTriplet triplet_for(const ImageCaptionPair& pair) {
  SplitMix64 rng(text::fnv1a64(pair.id, 0x1234));
  return random_triplet(rng, pair.id);
}

/// Synthesizer rules keyed on the caption. Pairs in `garbled` get a reply
/// without markers, pairs in `failing` get a non-transient HTTP 500.
inline nlohmann::json synth_rules_json(const std::vector<ImageCaptionPair>& pairs, const ChatTemplate& tmpl,
                                       const std::set<std::string>& garbled = {},
                                       const std::set<std::string>& failing = {}) {
  auto rules = nlohmann::json::array();
  for (const auto& p : pairs) {
    nlohmann::json rule = {{"match", {{"substring", p.caption}}}};
    if (failing.count(p.id)) {
      rule["fail"] = {{"kind", "http"}, {"status", 500}, {"transient", false}};
    } else if (garbled.count(p.id)) {
      rule["reply"] = "I cannot produce a task for this image.";
    } else {
      rule["reply"] = render_triplet_exchanges(triplet_for(p), tmpl);
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

/// Judge rules keyed on the instruction line of the consistency prompt.
inline nlohmann::json judge_rules_json(const std::vector<TaskTriplet>& triplets,
                                       const std::set<std::size_t>& consistent) {
  auto rules = nlohmann::json::array();
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const bool keep = consistent.count(i) > 0;
    const char* label = keep ? "consistent" : (i % 3 == 0 ? "open" : "inconsistent");
    rules.push_back({{"match", {{"substring", "Instruction: " + triplets[i].instruction + "\n"}}},
                     {"reply", std::string("The short answer is compared with the reasoning.\n") + label}});
  }
  return rules;
}

/// Eval rules that echo the gold answer for every instance id-tagged question.
inline nlohmann::json echo_rules_json(const std::vector<std::pair<std::string, std::string>>& question_to_answer) {
  auto rules = nlohmann::json::array();
  for (const auto& [q, a] : question_to_answer) rules.push_back({{"match", {{"substring", q}}}, {"reply", a}});
  return rules;
}

}  // namespace visynth::testing
