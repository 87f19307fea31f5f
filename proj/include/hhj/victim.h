#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hhj/rng.h"

namespace hhj {

enum class VictimKind {
  LargestSize,
  LargestRecords,
  LargestSizeSelfVictim,
  MedianSize,
  MedianRecords,
  SmallestSize,
  SmallestRecords,
  SmallestSizeSelfVictim,
  Random,
  HalfEmpty,
  LeastFragmentation,
  LowHigh,
  RecordSizeRatio,
};

// CLI names: largest-size, largest-records, largest-size-self, median-size,
// median-records, smallest-size, smallest-records, smallest-size-self,
// random, half-empty, least-frag, low-high, record-size-ratio.
VictimKind parse_victim_kind(const std::string& name);
const char* to_string(VictimKind kind) noexcept;
std::vector<VictimKind> all_victim_kinds();

enum class GrowthPolicy { NGNS, GS };

GrowthPolicy parse_growth_policy(const std::string& name);
const char* to_string(GrowthPolicy g) noexcept;

struct PartitionSnapshot {
  std::size_t id = 0;
  std::size_t frames_in_memory = 0;
  std::uint64_t bytes_in_memory = 0;
  std::uint64_t records_in_memory = 0;
  bool spilled = false;
  std::uint64_t fragmentation_bytes = 0;
};

inline constexpr double kRecordSizeRatioThreshold = 0.8;

// Victim-selection policy plus its per-run state (the Low-High toggle).
class VictimSelector {
 public:
  explicit VictimSelector(VictimKind kind = VictimKind::LargestSize) noexcept : kind_(kind) {}

  VictimKind kind() const noexcept { return kind_; }

  // Picks the partition to spill. Snapshots must cover every partition of
  // the round (their count is P). Eligibility: NG-NS only considers
  // memory-resident partitions holding frames; G-S prefers spilled
  // partitions holding two or more frames, then resident ones, then spilled
  // partitions down to their last frame. Ties go to the lowest id. nullopt
  // means nothing is eligible.
  std::optional<std::size_t> select(GrowthPolicy growth, std::span<const PartitionSnapshot> snapshots,
                                    std::size_t incoming_partition, SplitMix64& rng);

  // Eligible set for a growth policy, in ascending id order.
  static std::vector<const PartitionSnapshot*> eligible(GrowthPolicy growth,
                                                        std::span<const PartitionSnapshot> snapshots);

 private:
  VictimKind kind_;
  bool low_high_next_largest_ = false;
};

// Convenience wrapper with fresh selector state.
std::optional<std::size_t> select_victim(VictimKind kind, GrowthPolicy growth,
                                         std::span<const PartitionSnapshot> snapshots, std::size_t incoming_partition,
                                         SplitMix64& rng);

}  // namespace hhj
