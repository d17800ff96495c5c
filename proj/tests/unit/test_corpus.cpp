// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "support/support.hpp"
#include "visynth/corpus.hpp"
#include "visynth/error.hpp"
#include "visynth/image.hpp"

namespace visynth {
namespace {

using nlohmann::json;
using testing::TempDir;

std::string pair_line(const std::string& id, const std::string& caption) {
  return json{{"id", id}, {"image", {{"kind", "file"}, {"path", id + ".png"}}}, {"caption", caption}}.dump();
}

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
}

TEST(LoadPairs, WellFormedFile) {
  TempDir dir;
  write_lines(dir / "p.jsonl", {pair_line("a", "one"), pair_line("b", "two"), pair_line("c", "three")});
  const auto r = load_pairs(dir / "p.jsonl");
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_TRUE(r.rejects.empty());
  EXPECT_EQ(r.records[1].id, "b");
  EXPECT_EQ(r.records[1].image, ImageRef::file("b.png"));
}

TEST(LoadPairs, EmptyCaptionIsRejectedWithLineNumber) {
  TempDir dir;
  write_lines(dir / "p.jsonl", {pair_line("a", "x"), pair_line("b", "y"), pair_line("c", "   "), pair_line("d", "z"),
                                pair_line("e", "w")});
  const auto r = load_pairs(dir / "p.jsonl");
  EXPECT_EQ(r.records.size(), 4u);
  ASSERT_EQ(r.rejects.size(), 1u);
  EXPECT_EQ(r.rejects[0].line, 3u);
  EXPECT_NE(r.rejects[0].reason.find("empty caption"), std::string::npos);
}

TEST(LoadPairs, LimitTakesPrefix) {
  TempDir dir;
  std::vector<std::string> lines;
  for (int i = 0; i < 5; ++i) lines.push_back(pair_line("id" + std::to_string(i), "c"));
  write_lines(dir / "p.jsonl", lines);
  const auto r = load_pairs(dir / "p.jsonl", 2);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].id, "id0");
  EXPECT_EQ(r.records[1].id, "id1");
}

TEST(LoadPairs, MalformedAndDuplicateLinesAreReported) {
  TempDir dir;
  write_lines(dir / "p.jsonl", {pair_line("a", "x"), "{not json", "", pair_line("a", "again"),
                                R"({"id":"q","image":{"kind":"blank","width":0,"height":3},"caption":"c"})"});
  const auto r = load_pairs(dir / "p.jsonl");
  EXPECT_EQ(r.records.size(), 1u);
  ASSERT_EQ(r.rejects.size(), 3u);
  EXPECT_EQ(r.rejects[0].line, 2u);
  EXPECT_EQ(r.rejects[1].line, 4u);
  EXPECT_NE(r.rejects[1].reason.find("duplicate"), std::string::npos);
  EXPECT_EQ(r.rejects[2].line, 5u);
}

TEST(LoadPairs, MissingFile) {
  try {
    load_pairs("/nonexistent/pairs.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FileMissing);
  }
}

TrainingExample random_example(SplitMix64& rng) {
  TrainingExample ex;
  const bool four = rng.below(2) == 0;
  ex.provenance = four ? Provenance::CaptionPlusSynthetic : Provenance::CaptionOnly;
  ex.source_pair_id = "id-" + std::to_string(rng.next() % 1000);
  const int n = four ? 4 : 2;
  for (int i = 0; i < n; ++i) {
    ChatTurn t;
    t.role = i % 2 == 0 ? Role::User : Role::Assistant;
    t.text = testing::random_phrase(rng, 1, 30, true) + (rng.below(3) == 0 ? "\n\t\"quoted\"\\ \x01" : "");
    t.loss_bearing = t.role == Role::Assistant;
    if (i == 0) {
      switch (rng.below(3)) {
        case 0: t.image = ImageRef::file("dir/img " + std::to_string(i) + ".jpg"); break;
        case 1: t.image = ImageRef::blank(336, 224); break;
        default: t.image = ImageRef::inline_data("aGVsbG8=", "image/png"); break;
      }
    }
    ex.turns.push_back(std::move(t));
  }
  return ex;
}

TEST(WriteJsonl, RoundTripsTenExamples) {
  TempDir dir;
  SplitMix64 rng(1);
  std::vector<TrainingExample> xs;
  for (int i = 0; i < 10; ++i) xs.push_back(random_example(rng));
  EXPECT_EQ(write_jsonl(std::span<const TrainingExample>(xs), dir / "t.jsonl"), 10u);
  const auto back = load_training_examples(dir / "t.jsonl");
  EXPECT_TRUE(back.rejects.empty());
  EXPECT_EQ(back.records, xs);
}

TEST(WriteJsonl, EmptyListGivesEmptyFile) {
  TempDir dir;
  EXPECT_EQ(write_jsonl(std::span<const TrainingExample>(), dir / "e.jsonl"), 0u);
  EXPECT_EQ(read_text_file(dir / "e.jsonl"), "");
}

TEST(WriteJsonl, NewlinesAreEscapedAndRoundTrip) {
  TempDir dir;
  SplitMix64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TrainingExample> xs = {random_example(rng)};
    xs[0].turns[1].text += "\nline two\r\nline three\n";
    write_jsonl(std::span<const TrainingExample>(xs), dir / "n.jsonl");
    const auto raw = read_text_file(dir / "n.jsonl");
    ASSERT_EQ(std::count(raw.begin(), raw.end(), '\n'), 1);
    ASSERT_EQ(load_training_examples(dir / "n.jsonl").records, xs);
  }
}

TEST(Serialization, RoundTripsEveryType) {
  SplitMix64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto pairs = testing::toy_pairs(3);
    ImageCaptionPair p = pairs[i % 3];
    if (i % 2) p.domain_tag = "biomed";
    EXPECT_EQ(json(p).get<ImageCaptionPair>(), p);
    const auto t = testing::random_triplet(rng);
    EXPECT_EQ(json(t).get<TaskTriplet>(), t);
    SeedRecord s{p, t, i % 3 ? std::optional<std::string>("vqa") : std::nullopt};
    EXPECT_EQ(json(s).get<SeedRecord>(), s);
    const auto ex = random_example(rng);
    EXPECT_EQ(json(ex).get<TrainingExample>(), ex);
  }
  const LossMaskedSequence seq("abcdef", {{1, 2}, {3, 5}}, {ImageRef::blank(2, 2)});
  EXPECT_EQ(sequence_from_json(json(seq)), seq);
}

TEST(Validation, ImageRefRules) {
  EXPECT_THROW(validate(ImageRef::file("")), Error);
  EXPECT_THROW(validate(ImageRef::blank(0, 5)), Error);
  EXPECT_THROW(validate(ImageRef::blank(5, -1)), Error);
  EXPECT_NO_THROW(validate(ImageRef::blank(1, 1)));
  EXPECT_THROW(validate(ImageRef::inline_data("", "image/png")), Error);
}

TEST(Validation, TrainingExampleTurnRules) {
  TrainingExample ex;
  ex.provenance = Provenance::CaptionOnly;
  ex.turns = {{Role::User, "q", ImageRef::blank(2, 2), false}, {Role::Assistant, "a", std::nullopt, true}};
  EXPECT_NO_THROW(validate(ex));
  ex.provenance = Provenance::CaptionPlusSynthetic;
  EXPECT_THROW(validate(ex), Error);  // needs 4 turns
  ex.provenance = Provenance::CaptionOnly;
  ex.turns[1].image = ImageRef::blank(2, 2);
  EXPECT_THROW(validate(ex), Error);  // image on assistant turn
  ex.turns[1].image.reset();
  std::swap(ex.turns[0], ex.turns[1]);
  EXPECT_THROW(validate(ex), Error);  // does not start with user
}

TEST(LossMaskedSequence, RejectsBadSpans) {
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigInvalid;
  };
  EXPECT_EQ(code_of([] { LossMaskedSequence("abcdef", {{0, 3}, {2, 4}}); }), ErrorCode::InvalidMask);
  EXPECT_EQ(code_of([] { LossMaskedSequence("abcdef", {{3, 4}, {0, 2}}); }), ErrorCode::InvalidMask);
  EXPECT_EQ(code_of([] { LossMaskedSequence("abcdef", {{2, 2}}); }), ErrorCode::InvalidMask);
  EXPECT_EQ(code_of([] { LossMaskedSequence("abcdef", {{4, 7}}); }), ErrorCode::InvalidMask);
  EXPECT_EQ(code_of([] { LossMaskedSequence("a\xC3\xA9z", {{0, 2}}); }), ErrorCode::InvalidMask);
  EXPECT_NO_THROW(LossMaskedSequence("abcdef", {{0, 2}, {2, 6}}));
}

TEST(LossMaskedSequence, MaskedText) {
  const LossMaskedSequence seq("hello brave new world", {{0, 5}, {12, 15}});
  EXPECT_EQ(seq.masked_text(), "hellonew");
  EXPECT_EQ(seq.masked_segments(), (std::vector<std::string>{"hello", "new"}));
}

TEST(BlankImage, DeterministicWhitePng) {
  const auto a = render_blank_png(8, 4);
  const auto b = render_blank_png(8, 4);
  EXPECT_EQ(a, b);
  ASSERT_GT(a.size(), 8u);
  const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  EXPECT_TRUE(std::equal(sig, sig + 8, a.begin()));
  // IHDR width and height, big-endian, at offsets 16 and 20.
  auto be32 = [&](std::size_t off) {
    return (std::uint32_t(a[off]) << 24) | (std::uint32_t(a[off + 1]) << 16) | (std::uint32_t(a[off + 2]) << 8) | a[off + 3];
  };
  EXPECT_EQ(be32(16), 8u);
  EXPECT_EQ(be32(20), 4u);
  EXPECT_NE(render_blank_png(8, 5), a);

  const auto payload = materialize(ImageRef::blank(8, 4));
  EXPECT_EQ(payload.media_type, "image/png");
  EXPECT_EQ(text::base64_decode(payload.base64), a);
  EXPECT_EQ(payload.data_url().rfind("data:image/png;base64,", 0), 0u);
}

TEST(Materialize, FilesAndInline) {
  TempDir dir;
  write_text_file(dir / "x.jpg", "JPEGDATA");
  const auto p = materialize(ImageRef::file("x.jpg"), dir.path());
  EXPECT_EQ(p.media_type, "image/jpeg");
  EXPECT_EQ(p.base64, text::base64_encode(std::string_view("JPEGDATA")));
  EXPECT_EQ(materialize(ImageRef::inline_data("QUJD", "image/webp")), (ImagePayload{"image/webp", "QUJD"}));
  EXPECT_THROW(materialize(ImageRef::file("missing.png"), dir.path()), Error);
}

}  // namespace
}  // namespace visynth
