#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hhj/insertion.h"
#include "hhj/record.h"
#include "hhj/storage.h"
#include "hhj/victim.h"

namespace hhj {

struct JoinConfig {
  std::size_t memory_frames = 128;
  std::size_t frame_bytes = kDefaultFrameBytes;
  double fudge = 1.3;
  std::size_t floor_partitions = 20;
  // Same partition count in every round, bypassing the partition-count rule.
  std::optional<std::size_t> fixed_partitions;
  InsertionPolicy insertion = InsertionPolicy::append(8);
  VictimKind victim = VictimKind::LargestSize;
  GrowthPolicy growth = GrowthPolicy::NGNS;
  CacheModel cache = CacheModel::disabled();
  std::uint64_t seed = 0;
  std::uint32_t max_rounds = 16;
  bool bailout = true;
  double bailout_threshold = 0.20;
  bool role_reversal = true;
  bool in_memory_shortcut = true;
  bool best_match = false;
  bool reload_spilled = false;
  std::size_t table_entry_bytes = 16;
  SpillBackend spill_backend = SpillBackend::Memory;
  std::filesystem::path spill_dir;
  std::string run_id = "run";

  // Throws ConfigError.
  void validate() const;
  // Partition count for the first round (no statistics).
  std::size_t first_round_partitions() const;
};

// Receives join results as (build-input record, probe-input record) pairs,
// always oriented to the caller's inputs even after role reversal.
class JoinSink {
 public:
  virtual ~JoinSink() = default;
  virtual void emit(const RecordView& build, const RecordView& probe) = 0;
};

class CountingSink final : public JoinSink {
 public:
  void emit(const RecordView&, const RecordView&) override { ++count_; }
  std::uint64_t count() const noexcept { return count_; }

 private:
  std::uint64_t count_ = 0;
};

// Writes key | len | build payload ++ probe payload per result.
class BinaryFileSink final : public JoinSink {
 public:
  explicit BinaryFileSink(std::ostream& out) : out_(out) {}
  void emit(const RecordView& build, const RecordView& probe) override;

 private:
  std::ostream& out_;
  std::vector<std::uint8_t> scratch_;
};

class CallbackSink final : public JoinSink {
 public:
  explicit CallbackSink(std::function<void(const RecordView&, const RecordView&)> fn) : fn_(std::move(fn)) {}
  void emit(const RecordView& b, const RecordView& p) override { fn_(b, p); }

 private:
  std::function<void(const RecordView&, const RecordView&)> fn_;
};

// Stream of records for one side of one round.
class RecordSource {
 public:
  virtual ~RecordSource() = default;
  virtual bool next(RecordView& out) = 0;
  virtual void rewind() = 0;
  // Size in frames when known up front (spilled inputs); nullopt for
  // first-round inputs, where no statistics exist.
  virtual std::optional<std::uint64_t> known_frames() const = 0;
  // Frames passed through by the current scan.
  virtual std::uint64_t frames_consumed() const = 0;
};

// First-round input backed by a buffer in the binary dataset format. Frame
// counts are those of packing the records into frames in order.
class BufferSource final : public RecordSource {
 public:
  BufferSource(std::span<const std::uint8_t> bytes, std::size_t frame_bytes) noexcept
      : cursor_(bytes), frame_bytes_(frame_bytes) {}

  bool next(RecordView& out) override;
  void rewind() override;
  std::optional<std::uint64_t> known_frames() const override { return std::nullopt; }
  std::uint64_t frames_consumed() const override { return frames_; }

 private:
  RecordCursor cursor_;
  std::size_t frame_bytes_;
  std::size_t fill_ = 0;
  std::uint64_t frames_ = 0;
};

// Spilled partition read back one frame at a time; every frame read is
// charged to the ledger.
class SpillSource final : public RecordSource {
 public:
  SpillSource(std::shared_ptr<SpillFile> file, IoLedger& ledger, std::size_t frame_bytes);

  bool next(RecordView& out) override;
  void rewind() override;
  std::optional<std::uint64_t> known_frames() const override { return file_->frame_count(); }
  std::uint64_t frames_consumed() const override { return next_frame_; }

  const std::shared_ptr<SpillFile>& file() const noexcept { return file_; }

 private:
  std::shared_ptr<SpillFile> file_;
  IoLedger* ledger_;
  Frame frame_;
  std::uint64_t next_frame_ = 0;
  std::size_t offset_ = 0;
  bool loaded_ = false;
};

// Round-salted split function: the partition of `key` among `partitions`.
std::size_t split(std::int64_t key, std::size_t partitions, std::uint32_t round) noexcept;

// Frames needed for a hash table over `record_count` entries.
std::size_t estimate_table_frames(std::uint64_t record_count, std::size_t bytes_per_entry = 16,
                                  std::size_t frame_bytes = kDefaultFrameBytes) noexcept;

// Chained hash table over records that live in frames. Entries are laid out
// by bucket (12 bytes each: a 32-bit hash and a frame/offset reference).
class HashTable {
 public:
  void build(std::vector<const Frame*> frames);

  template <typename OnMatch>
  void probe(std::int64_t key, OnMatch&& on_match) const {
    if (entries_.empty()) return;
    const std::uint64_t h = hash(key);
    const std::size_t b = h & mask_;
    const auto tag = static_cast<std::uint32_t>(h >> 32);
    for (std::uint32_t i = offsets_[b]; i < offsets_[b + 1]; ++i) {
      const Entry& e = entries_[i];
      if (e.tag != tag) continue;
      std::size_t off = e.offset;
      const RecordView r = read_record(frames_[e.frame]->contents(), off);
      if (r.key == key) on_match(r);
    }
  }

  std::size_t entry_count() const noexcept { return entries_.size(); }
  // Bytes held by the table's own structures.
  std::size_t memory_bytes() const noexcept;
  void clear() noexcept;

  static std::uint64_t hash(std::int64_t key) noexcept;

 private:
  struct Entry {
    std::uint32_t tag;
    std::uint32_t frame;
    std::uint32_t offset;
  };
  std::vector<const Frame*> frames_;
  std::vector<Entry> entries_;
  std::vector<std::uint32_t> offsets_;
  std::size_t mask_ = 0;
};

struct JoinStats {
  std::uint32_t rounds = 0;
  std::uint64_t spilled_build_frames = 0;
  std::uint64_t spilled_probe_frames = 0;
  std::uint64_t spilled_partitions = 0;
  std::uint64_t output_records = 0;
  std::uint64_t frames_searched = 0;
  std::uint64_t inserts = 0;
  std::uint64_t bailouts = 0;
  std::uint64_t role_reversals = 0;
  std::uint64_t reloads = 0;
  std::uint64_t in_memory_shortcuts = 0;
  std::size_t peak_frames = 0;
  // First-round observations.
  std::size_t first_round_partitions = 0;
  std::uint64_t first_round_build_frames = 0;
  std::uint64_t first_round_resident_frames = 0;
  std::uint64_t first_round_spilled_partitions = 0;
  std::optional<double> first_round_fullness;
  IoLedger io;

  std::uint64_t spilled_frames() const noexcept { return spilled_build_frames + spilled_probe_frames; }
};

// Block nested loop join: (M-2)-frame blocks of `outer`, one full scan of
// `inner` per block. Emits (outer, inner) pairs; returns the pair count.
std::uint64_t bnlj(RecordSource& outer, RecordSource& inner, std::size_t memory_frames, std::size_t frame_bytes,
                   JoinSink& sink);

// Dynamic hybrid hash join.
class HybridHashJoin {
 public:
  explicit HybridHashJoin(JoinConfig config);
  ~HybridHashJoin();

  JoinStats run(RecordSource& build, RecordSource& probe, JoinSink& sink);

  const JoinConfig& config() const noexcept { return config_; }

 private:
  class Round;
  struct Task;

  // Runs one task; returns the child tasks of a partitioned round.
  std::vector<Task> process(Task& task, JoinSink& sink);
  bool run_in_memory(Task& task, JoinSink& sink);
  void run_bnlj(Task& task, JoinSink& sink);

  JoinConfig config_;
  JoinStats stats_;
  SplitMix64 rng_;
  VictimSelector selector_;
  std::unique_ptr<SpillStore> store_;
};

JoinStats run_join(std::span<const std::uint8_t> build, std::span<const std::uint8_t> probe,
                   const JoinConfig& config, JoinSink& sink);

// One-row stats export: header + values, JoinStats fields plus config echo.
void write_stats_csv(std::ostream& out, const JoinConfig& config, const JoinStats& stats);

}  // namespace hhj
