// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "support/support.hpp"
#include "visynth/error.hpp"
#include "visynth/seedkit.hpp"
#include "visynth/synthclient.hpp"

namespace visynth {
namespace {

ErrorCode parse_error(std::string_view raw, const ChatTemplate& tmpl = plain_template()) {
  try {
    parse_task_triplet(raw, tmpl);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a parse error for: " << raw;
  return ErrorCode::ConfigInvalid;
}

TEST(BuildPrompt, LastTurnIsCaption) {
  const ImageCaptionPair pair{"a", ImageRef::file("a.png"), "a chest x-ray", std::nullopt};
  const auto req = build_synthesis_prompt(pair);
  ASSERT_EQ(req.messages.size(), 2u);
  EXPECT_EQ(req.messages[0].role, MessageRole::User);
  EXPECT_EQ(req.messages[0].text, "Describe the image.");
  EXPECT_EQ(req.messages[0].image, pair.image);
  EXPECT_EQ(req.messages.back().role, MessageRole::Assistant);
  EXPECT_EQ(req.messages.back().text, "a chest x-ray");
}

TEST(BuildPrompt, BlankImageCarriesPayload) {
  const ImageCaptionPair pair{"b", ImageRef::blank(336, 336), "nothing", std::nullopt};
  const auto wire = to_wire(build_synthesis_prompt(pair), "m");
  const auto url = wire["messages"][0]["content"][0]["image_url"]["url"].get<std::string>();
  EXPECT_EQ(url.rfind("data:image/png;base64,", 0), 0u);
}

TEST(BuildPrompt, MatchesSeedkitTurnsOneAndTwo) {
  for (const auto& tmpl : {plain_template(), llama3_template()}) {
    const SeedRecord r{{"c", ImageRef::file("c.png"), "cap text", std::nullopt}, {"Q", "I", "P"}, std::nullopt};
    const auto full = render_synthesizer_tuning(r, tmpl).rendered_text();
    const auto prompt = render_request(build_synthesis_prompt(r.pair), tmpl);
    EXPECT_EQ(full.substr(0, prompt.size()), prompt);
    EXPECT_EQ(full.substr(prompt.size()), render_triplet_exchanges(r.triplet, tmpl));
  }
}

TEST(ParseTriplet, WellFormed) {
  const auto tmpl = plain_template();
  const std::string raw = render_triplet_exchanges({"What organ?", "It is the lung because...", "lung"}, tmpl);
  const auto p = parse_task_triplet(raw, tmpl);
  EXPECT_EQ(p.triplet, (TaskTriplet{"What organ?", "It is the lung because...", "lung"}));
  EXPECT_FALSE(p.instruction_mismatch);
}

TEST(ParseTriplet, ToleratesMissingFinalSeparatorAndTrailingText) {
  const auto tmpl = plain_template();
  const std::string raw =
      "User: Answer with a precise response. Q\nAssistant: P\nUser: Answer with an informative response. Q\nAssistant: I";
  EXPECT_EQ(parse_task_triplet(raw, tmpl).triplet, (TaskTriplet{"Q", "I", "P"}));
  EXPECT_EQ(parse_task_triplet(raw + "\nUser: extra", tmpl).triplet, (TaskTriplet{"Q", "I", "P"}));
  const auto llama = llama3_template();
  const auto raw3 = render_triplet_exchanges({"Q", "I", "P"}, llama);
  EXPECT_EQ(parse_task_triplet(raw3, llama).triplet, (TaskTriplet{"Q", "I", "P"}));
}

TEST(ParseTriplet, Errors) {
  EXPECT_EQ(parse_error("User: Answer with a precise response. Q\nAssistant: P\n"), ErrorCode::MissingMarker);
  EXPECT_EQ(parse_error("just some text"), ErrorCode::MissingMarker);
  EXPECT_EQ(parse_error("User: Answer with a precise response. \nAssistant: P\nUser: Answer with an informative "
                        "response. Q\nAssistant: I\n"),
            ErrorCode::EmptyField);
  EXPECT_EQ(parse_error("User: Answer with a precise response. Q\nAssistant:  \nUser: Answer with an informative "
                        "response. Q\nAssistant: I\n"),
            ErrorCode::EmptyField);
  EXPECT_EQ(parse_error("User: Answer with an informative response. Q\nAssistant: I\nUser: Answer with a precise "
                        "response. Q\nAssistant: P\n"),
            ErrorCode::MalformedTurnStructure);
  EXPECT_EQ(parse_error("User: Answer with a precise response. Q P User: Answer with an informative response. Q\n"
                        "Assistant: I\n"),
            ErrorCode::MalformedTurnStructure);
}

TEST(ParseTriplet, MissingInformativeNamesWhich) {
  try {
    parse_task_triplet("User: Answer with a precise response. Q\nAssistant: P\n", plain_template());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.detail(), "informative");
  }
}

TEST(ParseTriplet, RoundTripRandomized) {
  SplitMix64 rng(2024);
  for (const auto& tmpl : {plain_template(), llama3_template()}) {
    for (int i = 0; i < 2000; ++i) {
      const auto t = testing::random_triplet(rng);
      ASSERT_EQ(parse_task_triplet(render_triplet_exchanges(t, tmpl), tmpl).triplet, t);
    }
  }
}

TEST(ParseTriplet, MismatchFlagRateEqualsInjectedRate) {
  const auto tmpl = plain_template();
  SplitMix64 rng(5);
  int injected = 0, flagged = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto t = testing::random_triplet(rng);
    auto raw = render_triplet_exchanges(t, tmpl);
    if (rng.below(4) == 0) {
      ++injected;
      const std::string marker = std::string(kInformativeMarker) + " ";
      raw.insert(raw.find(marker) + marker.size(), "Divergent ");
    }
    const auto p = parse_task_triplet(raw, tmpl);
    EXPECT_EQ(p.triplet.instruction, t.instruction);  // precise-turn instruction kept
    flagged += p.instruction_mismatch;
  }
  EXPECT_GT(injected, 0);
  EXPECT_EQ(flagged, injected);
}

std::shared_ptr<ScriptedMock> synth_mock(const std::vector<ImageCaptionPair>& pairs, const ChatTemplate& tmpl,
                                         const std::set<std::string>& failing = {}, MockOptions options = {}) {
  return scripted_mock(mock_rules_from_json(testing::synth_rules_json(pairs, tmpl, {}, failing)), options);
}

TEST(SynthesizeBatch, FiftyPairsInOrder) {
  const auto pairs = testing::toy_pairs(50);
  auto mock = synth_mock(pairs, plain_template());
  const auto out = synthesize_batch(pairs, *mock, 8, plain_template());
  ASSERT_EQ(out.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(out[i].pair_id, pairs[i].id);
    ASSERT_TRUE(out[i].ok());
    EXPECT_EQ(std::get<TaskTriplet>(out[i].result), testing::triplet_for(pairs[i]));
  }
}

TEST(SynthesizeBatch, EveryTenthFails) {
  const auto pairs = testing::toy_pairs(50);
  std::set<std::string> failing;
  for (std::size_t i = 9; i < 50; i += 10) failing.insert(pairs[i].id);
  auto mock = synth_mock(pairs, plain_template(), failing);
  const auto out = synthesize_batch(pairs, *mock, 4, plain_template());
  const auto stats = summarize(out);
  EXPECT_EQ(stats.triplets, 45u);
  EXPECT_EQ(stats.backend_failures, 5u);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(out[i].pair_id, pairs[i].id);
    EXPECT_EQ(std::holds_alternative<BackendFailure>(out[i].result), failing.count(pairs[i].id) == 1);
  }
}

TEST(SynthesizeBatch, ParseFailurePreservesRawText) {
  const auto pairs = testing::toy_pairs(4);
  auto mock = scripted_mock(
      mock_rules_from_json(testing::synth_rules_json(pairs, plain_template(), {pairs[2].id})));
  const auto out = synthesize_batch(pairs, *mock, 2, plain_template());
  const auto* f = std::get_if<ParseFailure>(&out[2].result);
  ASSERT_NE(f, nullptr);
  EXPECT_EQ(f->raw_text, "I cannot produce a task for this image.");
  const auto stats = summarize(out);
  EXPECT_DOUBLE_EQ(stats.parse_failure_rate, 0.25);
  for (const auto& o : out) EXPECT_EQ(nlohmann::json(o).get<SynthesisOutcome>(), o);
}

TEST(SynthesizeBatch, ConcurrencyTransparentUnderLatency) {
  const auto pairs = testing::toy_pairs(60);
  std::set<std::string> failing = {pairs[7].id, pairs[33].id};
  auto run = [&](std::size_t width) {
    auto mock = synth_mock(pairs, plain_template(), failing, {std::chrono::microseconds(2000), 42});
    return synthesize_batch(pairs, *mock, width, plain_template());
  };
  const auto serial = run(1);
  EXPECT_EQ(run(4), serial);
  EXPECT_EQ(run(32), serial);
}

}  // namespace
}  // namespace visynth
