#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hhj/record.h"

namespace hhj {

inline constexpr std::size_t kDefaultFrameBytes = 32 * 1024;

// Fixed-size byte container holding records back to back.
class Frame {
 public:
  Frame() = default;
  explicit Frame(std::vector<std::uint8_t> buffer) noexcept : data_(std::move(buffer)) {}

  std::size_t capacity() const noexcept { return data_.size(); }
  std::size_t used() const noexcept { return used_; }
  std::size_t free() const noexcept { return data_.size() - used_; }
  std::size_t records() const noexcept { return records_; }
  bool empty() const noexcept { return records_ == 0; }

  // Returns false (and leaves the frame untouched) when the record does not fit.
  bool append(std::int64_t key, std::span<const std::uint8_t> payload) noexcept {
    const std::size_t need = kRecordHeaderBytes + payload.size();
    if (need > free()) return false;
    write_record(data_.data() + used_, key, payload);
    used_ += need;
    ++records_;
    return true;
  }
  bool append(const RecordView& r) noexcept { return append(r.key, r.payload); }

  void clear() noexcept {
    used_ = 0;
    records_ = 0;
  }

  std::span<const std::uint8_t> contents() const noexcept { return {data_.data(), used_}; }
  std::span<const std::uint8_t> raw() const noexcept { return data_; }

  // Replaces contents with `used` bytes already written into raw storage.
  void load(std::span<const std::uint8_t> bytes);

  std::vector<std::uint8_t> release_buffer() noexcept {
    clear();
    return std::move(data_);
  }

 private:
  std::vector<std::uint8_t> data_;
  std::size_t used_ = 0;
  std::size_t records_ = 0;
};

// Hands out frames under a hard budget. Released buffers are recycled.
class FramePool {
 public:
  FramePool(std::size_t budget_frames, std::size_t frame_bytes);

  // nullopt is the insufficient-memory signal; the pool is unchanged then.
  std::optional<Frame> allocate();
  void release(Frame&& frame);

  // Accounts frames that are not Frame objects (hash-table space).
  bool reserve(std::size_t frames);
  void unreserve(std::size_t frames);

  std::size_t budget() const noexcept { return budget_; }
  std::size_t allocated() const noexcept { return allocated_; }
  std::size_t available() const noexcept { return budget_ - allocated_; }
  std::size_t peak() const noexcept { return peak_; }
  std::size_t frame_bytes() const noexcept { return frame_bytes_; }

 private:
  void check() const;

  std::size_t budget_;
  std::size_t frame_bytes_;
  std::size_t allocated_ = 0;
  std::size_t peak_ = 0;
  std::vector<std::vector<std::uint8_t>> spare_;
};

enum class Phase : std::uint8_t { Build, Probe };
enum class WriteClass : std::uint8_t { Sequential, Random };

const char* to_string(Phase p) noexcept;
const char* to_string(WriteClass c) noexcept;

struct WriteEvent {
  std::uint32_t file_id = 0;
  std::uint64_t offset_frames = 0;
  std::uint64_t length_frames = 1;
  Phase phase = Phase::Build;
  std::uint32_t round = 1;
};

struct LedgerEntry {
  WriteEvent event;
  WriteClass cls = WriteClass::Random;
};

// Filesystem-cache (elevator) model. Disabled means writes reach the device
// in arrival order.
struct CacheModel {
  bool enabled = false;
  std::size_t capacity_frames = 0;

  static CacheModel disabled() { return {}; }
  static CacheModel elevator(std::size_t frames) { return {true, frames}; }
};

// Ordered record of every spill write, classified as sequential or random.
//
// Without a cache, an event is sequential when it spans >= 2 frames or when
// the previously recorded event ended exactly where this one starts in the
// same file; otherwise it is one random frame. With a cache, events collect
// in a pending buffer; a flush sorts them by (file, offset), merges
// contiguous runs and classifies each run with the same rule.
class IoLedger {
 public:
  IoLedger() = default;
  explicit IoLedger(CacheModel cache) : cache_(cache) {}

  void record_write(const WriteEvent& event);
  void flush_cache();
  void record_read(std::uint64_t frames) noexcept { total_read_ += frames; }

  const CacheModel& cache() const noexcept { return cache_; }
  const std::vector<LedgerEntry>& entries() const noexcept { return entries_; }
  std::size_t pending_frames() const noexcept { return pending_frames_; }

  std::uint64_t seq_frames() const noexcept { return seq_; }
  std::uint64_t rand_frames() const noexcept { return rand_; }
  std::uint64_t total_frames_written() const noexcept { return seq_ + rand_; }
  std::uint64_t total_frames_read() const noexcept { return total_read_; }
  // Includes events still pending in the cache.
  std::uint64_t frames_written(Phase phase) const noexcept {
    return phase == Phase::Build ? build_written_ : probe_written_;
  }
  std::uint64_t seq_frames(Phase phase) const noexcept { return phase == Phase::Build ? build_seq_ : probe_seq_; }
  std::uint64_t rand_frames(Phase phase) const noexcept { return phase == Phase::Build ? build_rand_ : probe_rand_; }

  // CSV: event_index,file_id,offset,length,phase,round,class
  void write_csv(std::ostream& out) const;

 private:
  void classify(const WriteEvent& event);

  CacheModel cache_;
  std::vector<LedgerEntry> entries_;
  std::vector<WriteEvent> pending_;
  std::size_t pending_frames_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t rand_ = 0;
  std::uint64_t total_read_ = 0;
  std::uint64_t build_written_ = 0;
  std::uint64_t probe_written_ = 0;
  std::uint64_t build_seq_ = 0;
  std::uint64_t build_rand_ = 0;
  std::uint64_t probe_seq_ = 0;
  std::uint64_t probe_rand_ = 0;
};

enum class SpillBackend { Memory, Disk };

// Append-only sequence of frames for one partition side of one round.
class SpillFile {
 public:
  SpillFile(std::uint32_t id, std::string name, std::size_t frame_bytes, std::optional<std::filesystem::path> path);
  ~SpillFile();
  SpillFile(const SpillFile&) = delete;
  SpillFile& operator=(const SpillFile&) = delete;

  std::uint32_t id() const noexcept { return id_; }
  const std::string& name() const noexcept { return name_; }
  std::uint64_t frame_count() const noexcept { return used_.size(); }
  std::uint64_t record_count() const noexcept { return records_; }
  std::uint64_t payload_bytes() const noexcept { return bytes_; }

  // Appends frames and returns the offset (in frames) of the first one.
  std::uint64_t append(std::span<const Frame> frames);
  std::uint64_t append(const Frame& frame) { return append(std::span<const Frame>(&frame, 1)); }

  // Loads frame `index` into `into` (which must have frame capacity).
  void read(std::uint64_t index, Frame& into);

  void discard();

 private:
  std::uint32_t id_;
  std::string name_;
  std::size_t frame_bytes_;
  std::optional<std::filesystem::path> path_;
  std::fstream stream_;
  std::vector<std::uint8_t> memory_;
  std::vector<std::size_t> starts_;
  std::vector<std::uint32_t> used_;
  std::uint64_t records_ = 0;
  std::uint64_t bytes_ = 0;
};

// Creates spill files for one engine run. Disk files are named
// {run_id}/r{round}_{side}_{partition}.spill under the base directory.
class SpillStore {
 public:
  SpillStore(SpillBackend backend, std::size_t frame_bytes, std::filesystem::path base_dir = {},
             std::string run_id = "run");
  ~SpillStore();
  SpillStore(const SpillStore&) = delete;
  SpillStore& operator=(const SpillStore&) = delete;

  // side is 'b' or 'p'; partition is a dotted lineage such as "3" or "3.7".
  std::shared_ptr<SpillFile> create(std::uint32_t round, char side, const std::string& partition);

  static std::string file_name(std::uint32_t round, char side, const std::string& partition);

  SpillBackend backend() const noexcept { return backend_; }
  std::size_t files_created() const noexcept { return next_id_; }
  const std::filesystem::path& directory() const noexcept { return dir_; }

 private:
  SpillBackend backend_;
  std::size_t frame_bytes_;
  std::filesystem::path dir_;
  std::uint32_t next_id_ = 0;
};

// Directory for disk spill files: $HHJ_TMPDIR, else the system temp dir.
std::filesystem::path default_spill_dir();

}  // namespace hhj
