#include "hhj/insertion.h"

#include <gtest/gtest.h>

#include <set>

#include "hhj/errors.h"

namespace hhj {
namespace {

std::vector<FrameView> frames_with(std::initializer_list<std::size_t> free) {
  std::vector<FrameView> out;
  for (std::size_t f : free) out.push_back({out.size(), f});
  return out;
}

std::optional<std::size_t> choose(const InsertionPolicy& p, const std::vector<FrameView>& frames, std::size_t need,
                                  SearchStats& stats, const NextFitCursor& cursor = {}) {
  SplitMix64 rng(1);
  return choose_frame(p, frames, cursor, need, rng, stats);
}

TEST(ChooseFrame, BestFitPicksTightestSlack) {
  SearchStats s;
  EXPECT_EQ(choose(InsertionPolicy::best_fit(), frames_with({600, 150, 400}), 140, s), 1u);
  EXPECT_EQ(s.frames_searched, 3u);
}

TEST(ChooseFrame, BestFitTieGoesToNewest) {
  SearchStats s;
  EXPECT_EQ(choose(InsertionPolicy::best_fit(), frames_with({200, 200, 900}), 100, s), 1u);
}

TEST(ChooseFrame, FirstFitScansNewestFirst) {
  SearchStats s;
  EXPECT_EQ(choose(InsertionPolicy::first_fit(), frames_with({100, 5000, 200}), 150, s), 2u);
  EXPECT_EQ(s.frames_searched, 1u);
}

TEST(ChooseFrame, EmptyListNeedsNewFrame) {
  for (const auto& p : all_insertion_policies()) {
    SearchStats s;
    EXPECT_FALSE(choose(p, {}, 10, s).has_value()) << to_string(p);
    EXPECT_EQ(s.frames_searched, 0u);
    EXPECT_EQ(s.inserts, 1u);
  }
}

TEST(ChooseFrame, AppendInspectsAtMostEight) {
  std::vector<FrameView> frames;
  for (std::size_t i = 0; i < 100; ++i) frames.push_back({i, 0});
  SearchStats s;
  EXPECT_FALSE(choose(InsertionPolicy::append(8), frames, 10, s).has_value());
  EXPECT_EQ(s.frames_searched, 8u);
  frames[2].free = 100;  // outside the window
  EXPECT_FALSE(choose(InsertionPolicy::append(8), frames, 10, s).has_value());
  frames[95].free = 100;
  EXPECT_EQ(choose(InsertionPolicy::append(8), frames, 10, s), 95u);
}

TEST(ChooseFrame, FirstFitPctWindow) {
  std::vector<FrameView> frames;
  for (std::size_t i = 0; i < 25; ++i) frames.push_back({i, 0});
  SearchStats s;
  // ceil(10% of 25) = 3
  EXPECT_FALSE(choose(InsertionPolicy::first_fit_pct(10), frames, 1, s).has_value());
  EXPECT_EQ(s.frames_searched, 3u);
  frames[22].free = 5;
  EXPECT_EQ(choose(InsertionPolicy::first_fit_pct(10), frames, 1, s), 22u);
}

TEST(ChooseFrame, NextFitSmallerRecordSearchesOlderFirst) {
  auto frames = frames_with({0, 0, 0, 0, 600, 100, 0, 700});
  NextFitCursor c;
  c.record(5, 1000);
  SearchStats s;
  EXPECT_EQ(choose(InsertionPolicy::next_fit(), frames, 500, s, c), 4u);
  EXPECT_EQ(s.frames_searched, 2u);
}

TEST(ChooseFrame, NextFitSmallerRecordWrapsToNewer) {
  auto frames = frames_with({0, 0, 100, 0, 900});
  NextFitCursor c;
  c.record(2, 1000);
  SearchStats s;
  EXPECT_EQ(choose(InsertionPolicy::next_fit(), frames, 500, s, c), 4u);
  EXPECT_EQ(s.frames_searched, 5u);
}

TEST(ChooseFrame, NextFitLargerRecordOnlyLooksNewer) {
  auto frames = frames_with({5000, 0, 100, 0});
  NextFitCursor c;
  c.record(1, 100);
  SearchStats s;
  EXPECT_FALSE(choose(InsertionPolicy::next_fit(), frames, 500, s, c).has_value());
  EXPECT_EQ(s.frames_searched, 3u);
}

TEST(ChooseFrame, NextFitFirstInsertScansAll) {
  SearchStats s;
  EXPECT_EQ(choose(InsertionPolicy::next_fit(), frames_with({900, 0, 0}), 500, s), 0u);
  EXPECT_EQ(s.frames_searched, 3u);
}

TEST(ChooseFrame, RandomPctInspectsDistinctFramesWithinBudget) {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    std::vector<FrameView> frames;
    for (std::size_t i = 0; i < n; ++i) frames.push_back({i, 0});
    SearchStats s;
    NextFitCursor c;
    EXPECT_FALSE(choose_frame(InsertionPolicy::random_pct(10), frames, c, 1, rng, s).has_value());
    ASSERT_EQ(s.frames_searched, (n * 10 + 99) / 100);
  }
}

// Plain loop equivalent of FirstFit.
std::optional<std::size_t> brute_first_fit(const std::vector<FrameView>& frames, std::size_t need) {
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < frames.size(); ++i)
    if (frames[i].free >= need) found = i;
  return found;
}

std::optional<std::size_t> brute_best_fit(const std::vector<FrameView>& frames, std::size_t need) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < frames.size(); ++i)
    if (frames[i].free >= need && (!best || frames[i].free <= frames[*best].free)) best = i;
  return best;
}

TEST(ChooseFrame, FitPoliciesMatchBruteForce) {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<FrameView> frames;
    const std::size_t n = rng.below(40);
    for (std::size_t i = 0; i < n; ++i) frames.push_back({i, static_cast<std::size_t>(rng.below(2000))});
    const std::size_t need = 1 + rng.below(2000);
    SearchStats s;
    NextFitCursor c;
    ASSERT_EQ(choose_frame(InsertionPolicy::first_fit(), frames, c, need, rng, s), brute_first_fit(frames, need));
    ASSERT_EQ(choose_frame(InsertionPolicy::best_fit(), frames, c, need, rng, s), brute_best_fit(frames, need));
  }
}

TEST(ChooseFrame, ChosenFrameAlwaysFits) {
  SplitMix64 rng(5);
  for (const auto& p : all_insertion_policies()) {
    NextFitCursor c;
    for (int trial = 0; trial < 3000; ++trial) {
      std::vector<FrameView> frames;
      const std::size_t n = rng.below(30);
      for (std::size_t i = 0; i < n; ++i) frames.push_back({i, static_cast<std::size_t>(rng.below(1000))});
      const std::size_t need = 1 + rng.below(1000);
      SearchStats s;
      const auto got = choose_frame(p, frames, c, need, rng, s);
      ASSERT_LE(s.frames_searched, std::max<std::size_t>(n, 0)) << to_string(p);
      if (p.kind == InsertionKind::Append) ASSERT_LE(s.frames_searched, 8u);
      if (got) {
        ASSERT_LT(*got, n);
        ASSERT_GE(frames[*got].free, need);
        c.record(*got, need);
      } else {
        c.reset();
      }
    }
  }
}

TEST(InsertionPolicy, ParseGrammar) {
  EXPECT_EQ(parse_insertion_policy("append:8"), InsertionPolicy::append(8));
  EXPECT_EQ(parse_insertion_policy("append"), InsertionPolicy::append(8));
  EXPECT_EQ(parse_insertion_policy("firstfit"), InsertionPolicy::first_fit());
  EXPECT_EQ(parse_insertion_policy("firstfit:10%"), InsertionPolicy::first_fit_pct(10));
  EXPECT_EQ(parse_insertion_policy("bestfit"), InsertionPolicy::best_fit());
  EXPECT_EQ(parse_insertion_policy("nextfit"), InsertionPolicy::next_fit());
  EXPECT_EQ(parse_insertion_policy("random:25%"), InsertionPolicy::random_pct(25));
  for (const char* bad : {"append:0", "firstfit:10", "random:0%", "random:101%", "bestfit:3", "worstfit", "append:x"})
    EXPECT_THROW(parse_insertion_policy(bad), ConfigError) << bad;
  for (const auto& p : all_insertion_policies()) EXPECT_EQ(parse_insertion_policy(to_string(p)), p);
}

TEST(InsertionPolicy, SearchLimit) {
  EXPECT_EQ(InsertionPolicy::append(8).search_limit(3), 3u);
  EXPECT_EQ(InsertionPolicy::append(8).search_limit(100), 8u);
  EXPECT_EQ(InsertionPolicy::first_fit_pct(10).search_limit(1), 1u);
  EXPECT_EQ(InsertionPolicy::first_fit_pct(10).search_limit(80), 8u);
  EXPECT_EQ(InsertionPolicy::first_fit_pct(10).search_limit(81), 9u);
  EXPECT_EQ(InsertionPolicy::best_fit().search_limit(17), 17u);
}

TEST(FrameFullness, Examples) {
  const FrameFill full[] = {{100, 100}};
  EXPECT_DOUBLE_EQ(*average_frame_fullness(full), 1.0);
  const FrameFill mixed[] = {{50, 100}, {100, 100}};
  EXPECT_DOUBLE_EQ(*average_frame_fullness(mixed), 0.75);
  EXPECT_FALSE(average_frame_fullness({}).has_value());
}

}  // namespace
}  // namespace hhj
