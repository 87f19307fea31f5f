#include "hhj/tuning.h"

#include <gtest/gtest.h>

#include <cmath>

#include "hhj/errors.h"
#include "hhj/rng.h"

namespace hhj {
namespace {

std::uint64_t table_row(std::uint64_t build) {
  return partition_count({build, 128, 1.3, 2, true});
}

TEST(PartitionCount, TableOneRows) {
  EXPECT_EQ(table_row(64), 2u);
  EXPECT_EQ(table_row(1024), 10u);
  EXPECT_EQ(table_row(8192), 83u);
}

TEST(PartitionCount, SmallBuildClampsToTwoForAnyFudge) {
  for (double f : {1.0, 1.2, 1.5, 2.0}) EXPECT_EQ(partition_count({64, 128, f, 2, true}), 2u);
}

TEST(PartitionCount, FloorOfTwenty) {
  EXPECT_EQ(partition_count({1024, 128, 1.3, 20, true}), 20u);
  EXPECT_EQ(partition_count({0, 128, 1.3, 20, false}), 20u);
  EXPECT_EQ(partition_count({0, 8, 1.3, 20, false}), 8u);
}

TEST(PartitionCount, Errors) {
  EXPECT_THROW(partition_count({10, 2, 1.3, 2, true}), ConfigError);
  EXPECT_THROW(partition_count({10, 20, 0.9, 2, true}), ConfigError);
}

TEST(PartitionCount, AlwaysWithinBounds) {
  SplitMix64 rng(1);
  for (int i = 0; i < 20000; ++i) {
    PartitionCountInput in;
    in.memory_frames = 3 + rng.below(5000);
    in.build_frames = rng.below(1u << 24);
    in.fudge = 1.0 + rng.unit();
    in.floor_partitions = rng.below(64);
    in.known_size = true;
    const auto p = partition_count(in);
    ASSERT_GE(p, 2u);
    ASSERT_LE(p, in.memory_frames);
  }
}

TEST(InMemoryPartitions, Examples) {
  EXPECT_EQ(in_memory_partitions(100, 50, 20), 10u);
  EXPECT_EQ(in_memory_partitions(20, 50, 20), 20u);
  EXPECT_EQ(in_memory_partitions(100, 2, 2), 0u);
}

TEST(CostModel, NgnsFirstVictim) {
  const IoSplit s = ngns_io_split({100, 50, 20, 1});
  EXPECT_DOUBLE_EQ(s.sequential, 2.5);
  EXPECT_DOUBLE_EQ(s.random, 2.5);
}

TEST(CostModel, GsFirstVictim) {
  const IoSplit s = gs_io_split({100, 50, 20, 1});
  EXPECT_NEAR(2.5 / 0.95, 2.6315789, 1e-6);
  EXPECT_NEAR(s.sequential, 2.5 / 0.95 + 2.5, 1e-12);
  EXPECT_NEAR(s.sequential, 5.1316, 1e-4);
  EXPECT_EQ(s.random, 0.0);
}

TEST(CostModel, NoSpillsCostNothing) {
  EXPECT_EQ(ngns_io_split({100, 50, 20, 0}).total(), 0.0);
  EXPECT_EQ(gs_io_split({100, 50, 20, 0}).total(), 0.0);
}

TEST(CostModel, NgnsMatchesTermLoop) {
  // Term-by-term evaluation written out independently.
  const double r = 100, m = 50, p = 20;
  double seq = 0, rnd = 0;
  for (int i = 1; i <= 10; ++i) {
    const double head = (m - i + 1) / (p - i + 1);
    seq += head;
    rnd += std::max(0.0, r / p - head);
  }
  const IoSplit s = ngns_io_split({100, 50, 20, 10});
  EXPECT_NEAR(s.sequential, seq, 1e-12);
  EXPECT_NEAR(s.random, rnd, 1e-12);
  EXPECT_NEAR(s.sequential, 30.0631, 1e-3);
}

TEST(CostModel, InvalidInputs) {
  EXPECT_THROW(gs_io_split({100, 50, 1, 0}), ConfigError);
  EXPECT_THROW(ngns_io_split({100, 50, 20, 21}), ConfigError);
  EXPECT_THROW(geometric_factor(1), ConfigError);
}

TEST(CostModel, SeriesConvergesToClosedForm) {
  const double chunk = (50.0 - 3 + 1) / (20.0 - 3 + 1);
  EXPECT_NEAR(gs_chunk_series(chunk, 20, 30), geometric_factor(20) * chunk, 1e-9);
}

TEST(IdealSpill, FitsInMemory) {
  EXPECT_EQ(ideal_spill(70, 70, 100), 0.0);
  EXPECT_EQ(ideal_spill(0, 50, 100), 0.0);
}

TEST(IdealSpill, HandExecutedGolden) {
  // P = 2, resident floor(98 / 1.4) = 70, build spill 30, probe spill 30;
  // each 15-frame child fits.
  EXPECT_DOUBLE_EQ(ideal_spill(100, 100, 100), 60.0);
}

TEST(IdealSpill, Monotone) {
  for (double build : {50.0, 200.0, 1000.0, 5000.0, 40000.0}) {
    double prev = ideal_spill(build, build, 3);
    for (std::uint64_t m = 4; m <= 1024; ++m) {
      const double cur = ideal_spill(build, build, m);
      ASSERT_LE(cur, prev + 1e-9) << "build " << build << " memory " << m;
      prev = cur;
    }
  }
  for (std::uint64_t m : {8u, 64u, 128u, 1000u}) {
    double prev = 0;
    for (double build = 1; build <= 20000; build += 7) {
      const double cur = ideal_spill(build, build, m);
      ASSERT_GE(cur, prev - 1e-9) << "memory " << m << " build " << build;
      prev = cur;
    }
  }
}

TEST(IdealSpill, BadMemory) { EXPECT_THROW(ideal_spill(10, 10, 2), ConfigError); }

}  // namespace
}  // namespace hhj
