#include "hhj/rng.h"

#include <gtest/gtest.h>

#include <array>
#include <cmath>

namespace hhj {
namespace {

TEST(SplitMix64, SameSeedSameStream) {
  SplitMix64 a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(SplitMix64, KnownFirstOutputs) {
  // Reference values of the standard splitmix64 for seed 0.
  SplitMix64 r(0);
  EXPECT_EQ(r.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(r.next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(r.next(), 0x06c45d188009454fULL);
}

TEST(SplitMix64, BelowStaysInRangeAndCoversIt) {
  SplitMix64 r(7);
  std::array<int, 10> hits{};
  for (int i = 0; i < 100000; ++i) {
    const auto v = r.below(10);
    ASSERT_LT(v, 10u);
    ++hits[v];
  }
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
}

TEST(SplitMix64, UniformIsInclusive) {
  SplitMix64 r(3);
  bool lo = false, hi = false;
  for (int i = 0; i < 10000; ++i) {
    const auto v = r.uniform(-2, 2);
    ASSERT_GE(v, -2);
    ASSERT_LE(v, 2);
    lo |= v == -2;
    hi |= v == 2;
  }
  EXPECT_TRUE(lo && hi);
}

TEST(SplitMix64, NormalMoments) {
  SplitMix64 r(11);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(SplitMix64, SplitStreamsDiffer) {
  SplitMix64 parent(5);
  SplitMix64 a = parent.split();
  SplitMix64 b = parent.split();
  EXPECT_NE(a.next(), b.next());
}

}  // namespace
}  // namespace hhj
