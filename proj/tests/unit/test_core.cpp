// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <chrono>
#include <numeric>
#include <set>
#include <thread>

#include "visynth/error.hpp"
#include "visynth/parallel.hpp"
#include "visynth/rng.hpp"
#include "visynth/text.hpp"

namespace visynth {
namespace {

TEST(Text, TrimAndBlank) {
  EXPECT_EQ(text::trim("  a b \n\t"), "a b");
  EXPECT_EQ(text::trim(""), "");
  EXPECT_TRUE(text::is_blank(" \n\t"));
  EXPECT_FALSE(text::is_blank(" x "));
}

TEST(Text, SplitJoin) {
  const auto parts = text::split_whitespace("  a\tb\n\nc  ");
  ASSERT_EQ(parts, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(text::join(parts, "-"), "a-b-c");
  EXPECT_TRUE(text::split_whitespace("   ").empty());
}

TEST(Text, CharBoundary) {
  const std::string s = "a\xC3\xA9z";  // a é z
  EXPECT_TRUE(text::is_char_boundary(s, 0));
  EXPECT_TRUE(text::is_char_boundary(s, 1));
  EXPECT_FALSE(text::is_char_boundary(s, 2));
  EXPECT_TRUE(text::is_char_boundary(s, 3));
  EXPECT_TRUE(text::is_char_boundary(s, 4));
}

TEST(Text, Base64KnownVectors) {
  // RFC 4648 test vectors.
  const std::pair<const char*, const char*> vectors[] = {{"", ""},         {"f", "Zg=="},     {"fo", "Zm8="},
                                                         {"foo", "Zm9v"},  {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="},
                                                         {"foobar", "Zm9vYmFy"}};
  for (const auto& [plain, encoded] : vectors) {
    EXPECT_EQ(text::base64_encode(std::string_view(plain)), encoded);
    const auto back = text::base64_decode(encoded);
    EXPECT_EQ(std::string(back.begin(), back.end()), plain);
  }
}

TEST(Text, Base64RoundTripAllLengths) {
  SplitMix64 rng(3);
  for (std::size_t n = 0; n < 64; ++n) {
    std::vector<std::uint8_t> bytes(n);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.below(256));
    EXPECT_EQ(text::base64_decode(text::base64_encode(bytes)), bytes);
  }
}

TEST(Text, Fnv1aKnownValues) {
  // Published FNV-1a 64-bit reference values.
  EXPECT_EQ(text::fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(text::fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(text::fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(text::hex64(0xabcULL), "0000000000000abc");
}

TEST(Rng, SplitMixReferenceSequence) {
  // Reference outputs of SplitMix64 seeded with 0.
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng.next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(rng.next(), 0x06c45d188009454fULL);
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  SplitMix64 rng(11);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_NEAR(c, 1000, 150);
}

TEST(Rng, KeyedStreamsAreIndependentOfOrder) {
  auto a = keyed_stream(5, 17);
  auto b = keyed_stream(5, 17);
  EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(keyed_stream(5, 17).next(), keyed_stream(5, 18).next());
  EXPECT_NE(keyed_stream(5, 17).next(), keyed_stream(6, 17).next());
}

TEST(Parallel, PreservesOrderUnderReordering) {
  for (std::size_t width : {1u, 3u, 16u, 200u}) {
    const auto out = ordered_parallel_map(100, width, [](std::size_t i) {
      std::this_thread::sleep_for(std::chrono::microseconds((i * 7919) % 300));
      return i * i;
    });
    ASSERT_EQ(out.size(), 100u);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], i * i);
  }
}

TEST(Parallel, RespectsMaxInFlight) {
  std::atomic<int> live{0}, peak{0};
  ordered_parallel_map(64, 4, [&](std::size_t) {
    const int now = ++live;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::microseconds(200));
    --live;
    return 0;
  });
  EXPECT_LE(peak.load(), 4);
  EXPECT_GE(peak.load(), 1);
}

TEST(Parallel, RejectsZeroWidthAndRethrows) {
  EXPECT_THROW(ordered_parallel_map(3, 0, [](std::size_t i) { return i; }), Error);
  EXPECT_TRUE(ordered_parallel_map(0, 4, [](std::size_t i) { return i; }).empty());
  EXPECT_THROW(ordered_parallel_map(10, 4,
                                    [](std::size_t i) {
                                      if (i == 5) throw std::runtime_error("boom");
                                      return i;
                                    }),
               std::runtime_error);
}

TEST(ErrorCodes, NamesAreDistinct) {
  std::set<std::string_view> names;
  for (int c = 0; c <= static_cast<int>(ErrorCode::ConfigInvalid); ++c) names.insert(to_string(static_cast<ErrorCode>(c)));
  EXPECT_EQ(names.size(), static_cast<std::size_t>(ErrorCode::ConfigInvalid) + 1);
  const BackendError e(ErrorCode::HttpStatus, "x", true, 503);
  EXPECT_EQ(e.http_status(), 503);
  EXPECT_TRUE(e.transient());
  EXPECT_EQ(e.detail(), "503");
}

}  // namespace
}  // namespace visynth
