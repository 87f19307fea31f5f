#pragma once

#include <cstdint>

namespace hhj {

// Inputs to the partition-count rule. Sizes are in frames.
struct PartitionCountInput {
  std::uint64_t build_frames = 0;
  std::uint64_t memory_frames = 0;
  double fudge = 1.3;
  std::uint64_t floor_partitions = 20;
  bool known_size = false;
};

// Partition count for one round.
//
// With known sizes the classic estimate ceil((R*F - M) / (M - 1)) is clamped
// to [max(2, min(floor, M)), M]. Without statistics (first round) the floor
// itself is used, capped by the memory. Pass floor_partitions = 2 to disable
// the floor. Throws ConfigError when memory_frames < 3 or fudge < 1.
std::uint64_t partition_count(const PartitionCountInput& in);

// Analytical NG-NS / G-S model inputs, in frames (real-valued).
struct CostModelInput {
  double build = 0;      // R
  double memory = 0;     // M
  std::uint64_t partitions = 2;  // P
  std::uint64_t spilled = 0;     // x
};

struct IoSplit {
  double sequential = 0;
  double random = 0;

  double total() const noexcept { return sequential + random; }
};

// Partitions left in memory at the end of the build under uniform data:
// min(P, floor(M / (R/P))), clamped to [0, P].
std::uint64_t in_memory_partitions(double build, double memory, std::uint64_t partitions);

// Size of the i-th victim (1-based) when it first spills: (M-i+1)/(P-i+1).
double first_spill_frames(const CostModelInput& in, std::uint64_t i);

IoSplit ngns_io_split(const CostModelInput& in);
IoSplit gs_io_split(const CostModelInput& in);

// 1 / (1 - 1/P): closed form of sum_{k>=0} P^-k.
double geometric_factor(std::uint64_t partitions);

// Finite partial sum sum_{k=0..terms} P^-k * chunk, the series the G-S
// closed form is the limit of.
double gs_chunk_series(double chunk, std::uint64_t partitions, unsigned terms);

inline constexpr double kIdealSpillFudge = 1.4;

// Minimum spilled frames (build + probe, all rounds) of an omniscient hybrid
// hash join that knows exact sizes. Result writing is not counted.
double ideal_spill(double build_frames, double probe_frames, std::uint64_t memory_frames,
                   double fudge = kIdealSpillFudge);

}  // namespace hhj
