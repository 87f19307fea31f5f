#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hhj/rng.h"

namespace hhj {

enum class InsertionKind { Append, FirstFit, FirstFitPct, BestFit, NextFit, RandomPct };

// Partition-insertion algorithm. `param` is n for Append(n) and the percent
// for FirstFitPct / RandomPct.
struct InsertionPolicy {
  InsertionKind kind = InsertionKind::Append;
  std::uint32_t param = 8;

  static InsertionPolicy append(std::uint32_t n) { return {InsertionKind::Append, n}; }
  static InsertionPolicy first_fit() { return {InsertionKind::FirstFit, 0}; }
  static InsertionPolicy first_fit_pct(std::uint32_t pct) { return {InsertionKind::FirstFitPct, pct}; }
  static InsertionPolicy best_fit() { return {InsertionKind::BestFit, 0}; }
  static InsertionPolicy next_fit() { return {InsertionKind::NextFit, 0}; }
  static InsertionPolicy random_pct(std::uint32_t pct) { return {InsertionKind::RandomPct, pct}; }

  void validate() const;
  // Frames a bounded policy may inspect for a partition of `frame_count`
  // frames: n, ceil(p% * count), or count.
  std::size_t search_limit(std::size_t frame_count) const noexcept;

  friend bool operator==(const InsertionPolicy&, const InsertionPolicy&) = default;
};

// Grammar: append:8 | firstfit | firstfit:10% | bestfit | nextfit | random:10%
InsertionPolicy parse_insertion_policy(const std::string& text);
std::string to_string(const InsertionPolicy& policy);

// The six policies with their default parameters.
std::vector<InsertionPolicy> all_insertion_policies();

// One in-memory frame of a partition; index 0 is the oldest.
struct FrameView {
  std::size_t index = 0;
  std::size_t free = 0;
};

// Next-Fit state: where the previous record went and how large it was.
struct NextFitCursor {
  std::optional<std::size_t> last_index;
  std::size_t last_record_size = 0;

  void record(std::size_t index, std::size_t size) noexcept {
    last_index = index;
    last_record_size = size;
  }
  void reset() noexcept { *this = {}; }
};

struct SearchStats {
  std::uint64_t frames_searched = 0;
  std::uint64_t inserts = 0;
};

// Picks the frame that receives a record of `need` bytes, or nullopt when a
// new frame must be appended. Every frame whose free space is inspected
// counts once in stats.frames_searched. The cursor is read, never written;
// callers update it after a successful insert.
std::optional<std::size_t> choose_frame(const InsertionPolicy& policy, std::span<const FrameView> frames,
                                        const NextFitCursor& cursor, std::size_t need, SplitMix64& rng,
                                        SearchStats& stats);

struct FrameFill {
  std::size_t used = 0;
  std::size_t capacity = 0;
};

// Sum of used bytes over sum of capacity; nullopt when there are no frames.
std::optional<double> average_frame_fullness(std::span<const FrameFill> frames);

}  // namespace hhj
