#include "hhj/victim.h"

#include <algorithm>
#include <array>
#include <utility>

#include "hhj/errors.h"

namespace hhj {

namespace {

constexpr std::array<std::pair<VictimKind, const char*>, 13> kVictimNames{{
    {VictimKind::LargestSize, "largest-size"},
    {VictimKind::LargestRecords, "largest-records"},
    {VictimKind::LargestSizeSelfVictim, "largest-size-self"},
    {VictimKind::MedianSize, "median-size"},
    {VictimKind::MedianRecords, "median-records"},
    {VictimKind::SmallestSize, "smallest-size"},
    {VictimKind::SmallestRecords, "smallest-records"},
    {VictimKind::SmallestSizeSelfVictim, "smallest-size-self"},
    {VictimKind::Random, "random"},
    {VictimKind::HalfEmpty, "half-empty"},
    {VictimKind::LeastFragmentation, "least-frag"},
    {VictimKind::LowHigh, "low-high"},
    {VictimKind::RecordSizeRatio, "record-size-ratio"},
}};

using Candidates = std::vector<const PartitionSnapshot*>;

template <typename Key>
const PartitionSnapshot* max_by(const Candidates& c, Key key) {
  const PartitionSnapshot* best = nullptr;
  for (const auto* s : c)
    if (best == nullptr || key(*s) > key(*best)) best = s;
  return best;
}

template <typename Key>
const PartitionSnapshot* min_by(const Candidates& c, Key key) {
  const PartitionSnapshot* best = nullptr;
  for (const auto* s : c)
    if (best == nullptr || key(*s) < key(*best)) best = s;
  return best;
}

template <typename Key>
const PartitionSnapshot* lower_median_by(Candidates c, Key key) {
  std::stable_sort(c.begin(), c.end(), [&](const auto* a, const auto* b) { return key(*a) < key(*b); });
  const auto value = key(*c[(c.size() - 1) / 2]);
  // Lowest id among the partitions sharing the median value.
  return *std::find_if(c.begin(), c.end(), [&](const auto* s) { return key(*s) == value; });
}

auto by_bytes = [](const PartitionSnapshot& s) { return s.bytes_in_memory; };
auto by_records = [](const PartitionSnapshot& s) { return s.records_in_memory; };

const PartitionSnapshot* smallest_records(const Candidates& c) {
  Candidates with_records;
  for (const auto* s : c)
    if (s->records_in_memory >= 1) with_records.push_back(s);
  return min_by(with_records.empty() ? c : with_records, by_records);
}

const PartitionSnapshot* self_or(const Candidates& c, std::size_t incoming, const PartitionSnapshot* fallback) {
  for (const auto* s : c)
    if (s->id == incoming) return s;
  return fallback;
}

}  // namespace

VictimKind parse_victim_kind(const std::string& name) {
  for (const auto& [kind, n] : kVictimNames)
    if (name == n) return kind;
  throw ConfigError("unknown victim policy: " + name);
}

const char* to_string(VictimKind kind) noexcept {
  for (const auto& [k, n] : kVictimNames)
    if (k == kind) return n;
  return "?";
}

std::vector<VictimKind> all_victim_kinds() {
  std::vector<VictimKind> out;
  for (const auto& [k, n] : kVictimNames) out.push_back(k);
  return out;
}

GrowthPolicy parse_growth_policy(const std::string& name) {
  if (name == "ngns") return GrowthPolicy::NGNS;
  if (name == "gs") return GrowthPolicy::GS;
  throw ConfigError("unknown growth policy: " + name);
}

const char* to_string(GrowthPolicy g) noexcept { return g == GrowthPolicy::NGNS ? "ngns" : "gs"; }

std::vector<const PartitionSnapshot*> VictimSelector::eligible(GrowthPolicy growth,
                                                               std::span<const PartitionSnapshot> snapshots) {
  Candidates resident;
  Candidates spilled;
  Candidates single;  // spilled, exactly one frame
  for (const auto& s : snapshots) {
    if (s.frames_in_memory == 0) continue;
    if (!s.spilled)
      resident.push_back(&s);
    else if (s.frames_in_memory == 1)
      single.push_back(&s);
    else
      spilled.push_back(&s);
  }
  // Snapshots normally arrive in id order already.
  auto by_id = [](const auto* a, const auto* b) { return a->id < b->id; };
  std::sort(resident.begin(), resident.end(), by_id);
  if (growth == GrowthPolicy::NGNS) return resident;
  std::sort(spilled.begin(), spilled.end(), by_id);
  std::sort(single.begin(), single.end(), by_id);
  if (!spilled.empty()) return spilled;
  if (!resident.empty()) return resident;
  return single;
}

std::optional<std::size_t> VictimSelector::select(GrowthPolicy growth, std::span<const PartitionSnapshot> snapshots,
                                                  std::size_t incoming, SplitMix64& rng) {
  const Candidates c = eligible(growth, snapshots);
  if (c.empty()) return std::nullopt;

  const PartitionSnapshot* pick = nullptr;
  switch (kind_) {
    case VictimKind::LargestSize:
      pick = max_by(c, by_bytes);
      break;
    case VictimKind::LargestRecords:
      pick = max_by(c, by_records);
      break;
    case VictimKind::LargestSizeSelfVictim:
      pick = self_or(c, incoming, max_by(c, by_bytes));
      break;
    case VictimKind::MedianSize:
      pick = lower_median_by(c, by_bytes);
      break;
    case VictimKind::MedianRecords:
      pick = lower_median_by(c, by_records);
      break;
    case VictimKind::SmallestSize:
      pick = min_by(c, by_bytes);
      break;
    case VictimKind::SmallestRecords:
      pick = smallest_records(c);
      break;
    case VictimKind::SmallestSizeSelfVictim:
      pick = self_or(c, incoming, min_by(c, by_bytes));
      break;
    case VictimKind::Random:
      pick = c[rng.below(c.size())];
      break;
    case VictimKind::HalfEmpty: {
      const auto spilled = static_cast<std::size_t>(
          std::count_if(snapshots.begin(), snapshots.end(), [](const auto& s) { return s.spilled; }));
      pick = spilled <= snapshots.size() / 2 ? min_by(c, by_bytes) : max_by(c, by_bytes);
      break;
    }
    case VictimKind::LeastFragmentation:
      pick = min_by(c, [](const PartitionSnapshot& s) { return s.fragmentation_bytes; });
      break;
    case VictimKind::LowHigh:
      pick = low_high_next_largest_ ? max_by(c, by_bytes) : min_by(c, by_bytes);
      low_high_next_largest_ = !low_high_next_largest_;
      break;
    case VictimKind::RecordSizeRatio: {
      const std::uint64_t largest = max_by(c, by_bytes)->bytes_in_memory;
      const double threshold = kRecordSizeRatioThreshold * static_cast<double>(largest);
      Candidates big;
      for (const auto* s : c)
        if (static_cast<double>(s->bytes_in_memory) >= threshold) big.push_back(s);
      pick = min_by(big, by_records);
      break;
    }
  }
  return pick->id;
}

std::optional<std::size_t> select_victim(VictimKind kind, GrowthPolicy growth,
                                         std::span<const PartitionSnapshot> snapshots, std::size_t incoming_partition,
                                         SplitMix64& rng) {
  VictimSelector selector(kind);
  return selector.select(growth, snapshots, incoming_partition, rng);
}

}  // namespace hhj
