// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <regex>

#include "support/support.hpp"
#include "visynth/error.hpp"
#include "visynth/filterkit.hpp"

namespace visynth {
namespace {

ErrorCode label_error(std::string_view raw) {
  try {
    parse_consistency_label(raw);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << raw;
  return ErrorCode::ConfigInvalid;
}

TEST(ConsistencyPrompt, ContainsFieldsVerbatim) {
  const TaskTriplet t{"Which lobe {precise_response}?", "The opacity sits high.\nSo upper.", "upper lobe"};
  const auto p = build_consistency_prompt(t);
  EXPECT_NE(p.find(t.instruction), std::string::npos);
  EXPECT_NE(p.find(t.informative_response), std::string::npos);
  EXPECT_NE(p.find(t.precise_response), std::string::npos);
  // Field text containing a placeholder is not substituted again.
  EXPECT_NE(p.find("Which lobe {precise_response}?"), std::string::npos);
}

TEST(ConsistencyPrompt, DiffersOnlyInInterpolatedFields) {
  const TaskTriplet a{"AAA", "BBB", "CCC"};
  const TaskTriplet b{"XX", "YYYY", "Z"};
  auto pa = build_consistency_prompt(a);
  auto pb = build_consistency_prompt(b);
  for (const auto& [from, to] : {std::pair{"AAA", "#1"}, std::pair{"BBB", "#2"}, std::pair{"CCC", "#3"}})
    pa = std::regex_replace(pa, std::regex(from), to);
  for (const auto& [from, to] : {std::pair{"XX", "#1"}, std::pair{"YYYY", "#2"}, std::pair{"Z", "#3"}})
    pb = std::regex_replace(pb, std::regex(from), to);
  EXPECT_EQ(pa, pb);
}

TEST(ConsistencyPrompt, EndsWithLabelDirective) {
  const auto p = build_consistency_prompt({"a", "b", "c"});
  const auto last_line = p.substr(p.rfind('\n') + 1);
  for (const char* label : {"consistent", "inconsistent", "open"}) EXPECT_NE(last_line.find(label), std::string::npos);
}

TEST(ConsistencyPrompt, CustomTemplateMustHaveAllPlaceholders) {
  EXPECT_EQ(build_consistency_prompt({"a", "b", "c"}, "{instruction}|{precise_response}|{informative_response}"), "a|c|b");
  try {
    build_consistency_prompt({"a", "b", "c"}, "{instruction} {precise_response}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TemplateInvalid);
  }
}

TEST(ConsistencyLabel, Parsing) {
  EXPECT_EQ(parse_consistency_label("reasoning...\nConsistent"), ConsistencyLabel::Consistent);
  EXPECT_EQ(parse_consistency_label("the answer is OPEN."), ConsistencyLabel::Open);
  EXPECT_EQ(parse_consistency_label("Inconsistent\n\n  \n"), ConsistencyLabel::Inconsistent);
  EXPECT_EQ(parse_consistency_label("consistent here\nLabel: inconsistent"), ConsistencyLabel::Inconsistent);
  EXPECT_EQ(parse_consistency_label("open, open"), ConsistencyLabel::Open);
  EXPECT_EQ(label_error("consistent or inconsistent"), ErrorCode::AmbiguousLabel);
  EXPECT_EQ(label_error(""), ErrorCode::NoLabelFound);
  EXPECT_EQ(label_error("consistent\nno idea"), ErrorCode::NoLabelFound);
  EXPECT_EQ(label_error("reopened"), ErrorCode::NoLabelFound);
}

std::vector<TaskTriplet> triplets(std::size_t n) {
  SplitMix64 rng(31);
  std::vector<TaskTriplet> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(testing::random_triplet(rng, "t" + std::to_string(i)));
  return out;
}

TEST(FilterTriplets, ThirtyOfHundred) {
  const auto ts = triplets(100);
  std::set<std::size_t> keep;
  for (std::size_t i = 0; i < 100; i += 10)
    for (std::size_t k = 0; k < 3; ++k) keep.insert(i + k * 3);
  ASSERT_EQ(keep.size(), 30u);
  auto judge = scripted_mock(mock_rules_from_json(testing::judge_rules_json(ts, keep)));
  const auto r = filter_triplets(ts, *judge, 8);
  EXPECT_EQ(r.stats.total, 100u);
  EXPECT_EQ(r.stats.consistent, 30u);
  EXPECT_DOUBLE_EQ(r.stats.retention_rate, 0.30);
  EXPECT_EQ(r.stats.consistent + r.stats.inconsistent + r.stats.open + r.stats.judge_failures, r.stats.total);
  ASSERT_EQ(r.kept.size(), 30u);
  EXPECT_EQ(std::vector<std::size_t>(keep.begin(), keep.end()), r.kept_indices);
  for (std::size_t i = 0; i < r.kept.size(); ++i) EXPECT_EQ(r.kept[i], ts[r.kept_indices[i]]);
}

TEST(FilterTriplets, AllOpen) {
  const auto ts = triplets(12);
  auto judge = scripted_mock({{match_any(), std::string("open"), std::nullopt}});
  const auto r = filter_triplets(ts, *judge, 3);
  EXPECT_TRUE(r.kept.empty());
  EXPECT_EQ(r.stats.open, 12u);
  EXPECT_EQ(r.stats.retention_rate, 0.0);
}

TEST(FilterTriplets, GarbageCountsAsJudgeFailure) {
  const auto ts = triplets(10);
  std::vector<MockRule> rules;
  for (std::size_t i : {1u, 4u, 7u})
    rules.push_back({match_substring("Instruction: " + ts[i].instruction + "\n"), std::string("¯\\_(ツ)_/¯"), {}});
  rules.push_back({match_substring("Instruction: " + ts[5].instruction + "\n"),
                   MockFailure{ErrorCode::Timeout, false, 0, "slow"}, {}});
  rules.push_back({match_any(), std::string("consistent"), {}});
  auto judge = scripted_mock(std::move(rules));
  const auto r = filter_triplets(ts, *judge, 4);
  EXPECT_EQ(r.stats.judge_failures, 4u);
  EXPECT_EQ(r.stats.consistent, 6u);
  EXPECT_FALSE(r.labels[1].has_value());
  EXPECT_FALSE(r.labels[5].has_value());
  EXPECT_EQ(r.kept_indices, (std::vector<std::size_t>{0, 2, 3, 6, 8, 9}));
}

TEST(FilterTriplets, EmptyInputAndDeterminism) {
  auto judge = scripted_mock({{match_any(), std::string("consistent"), {}}});
  const auto empty = filter_triplets({}, *judge, 4);
  EXPECT_EQ(empty.stats.total, 0u);
  EXPECT_EQ(empty.stats.retention_rate, 0.0);

  const auto ts = triplets(200);
  std::set<std::size_t> keep;
  SplitMix64 rng(4);
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (rng.below(3) == 0) keep.insert(i);
  const auto rules = testing::judge_rules_json(ts, keep);
  auto run = [&](std::size_t w) {
    auto j = scripted_mock(mock_rules_from_json(rules), {std::chrono::microseconds(500), 9});
    return filter_triplets(ts, *j, w);
  };
  const auto a = run(1);
  const auto b = run(16);
  EXPECT_EQ(a.kept, b.kept);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.stats, b.stats);
}

TEST(FilterStats, TableMatchesJson) {
  const FilterStats s{200, 61, 80, 50, 9, 61.0 / 200.0};
  const nlohmann::json j = s;
  EXPECT_EQ(j.get<FilterStats>(), s);
  const auto table = format_filter_stats_table(s);
  EXPECT_NE(table.find("200"), std::string::npos);
  EXPECT_NE(table.find("30.5"), std::string::npos);   // consistent %
  EXPECT_NE(table.find("0.305"), std::string::npos);  // retention
}

TEST(Cot, AssemblyExample) {
  const TaskTriplet t{"Where is the lesion?", "The lesion is in the upper lobe of the left lung.", "upper lobe"};
  const auto c = assemble_cot(t);
  EXPECT_EQ(c.response, t.informative_response + "\n\nTherefore, the answer is: upper lobe");
  EXPECT_EQ(c.instruction, t.instruction);
  EXPECT_EQ(c.source_triplet, t);
  EXPECT_EQ(nlohmann::json(c).get<CotTask>(), c);
}

TEST(Cot, SuffixDuplicationPermitted) {
  const TaskTriplet t{"Q", "reasoning ends with upper lobe", "upper lobe"};
  const auto c = assemble_cot(t);
  const auto info_at = c.response.find(t.informative_response);
  EXPECT_EQ(info_at, 0u);
  EXPECT_EQ(c.response.rfind(t.precise_response), c.response.size() - t.precise_response.size());
}

TEST(Cot, SplitRecoversFields) {
  SplitMix64 rng(6);
  for (int i = 0; i < 2000; ++i) {
    const auto t = testing::random_triplet(rng);
    const auto c = assemble_cot(t);
    const auto parts = split_cot(c.response);
    ASSERT_TRUE(parts.has_value());
    EXPECT_EQ(parts->first, t.informative_response);
    EXPECT_EQ(parts->second, t.precise_response);
  }
  EXPECT_FALSE(split_cot("no connective").has_value());
  const auto custom = assemble_cot({"q", "i", "p"}, " => ");
  EXPECT_EQ(custom.response, "i => p");
  EXPECT_EQ(split_cot(custom.response, " => ")->second, "p");
}

}  // namespace
}  // namespace visynth
