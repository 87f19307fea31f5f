#include "hhj/engine.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "hhj/errors.h"
#include "hhj/rng.h"
#include "hhj/tuning.h"

namespace hhj {

// ---------------------------------------------------------------------------
// Configuration

std::size_t JoinConfig::first_round_partitions() const {
  if (fixed_partitions) return *fixed_partitions;
  PartitionCountInput in;
  in.memory_frames = memory_frames;
  in.fudge = fudge;
  in.floor_partitions = floor_partitions;
  in.known_size = false;
  return std::min<std::size_t>(partition_count(in), memory_frames - 1);
}

void JoinConfig::validate() const {
  if (memory_frames < 3) throw ConfigError("join needs at least 3 memory frames");
  if (frame_bytes <= kRecordHeaderBytes) throw ConfigError("frame size too small");
  if (!(fudge >= 1.0)) throw ConfigError("fudge factor must be >= 1");
  if (floor_partitions < 2) throw ConfigError("partition floor must be >= 2");
  if (fixed_partitions && (*fixed_partitions < 2 || *fixed_partitions + 1 > memory_frames))
    throw ConfigError("fixed partition count must lie in [2, memory_frames - 1]");
  insertion.validate();
  if (!(bailout_threshold >= 0.0 && bailout_threshold <= 1.0)) throw ConfigError("bail-out threshold must be in [0, 1]");
  if (max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
  if (cache.enabled && cache.capacity_frames == 0) throw ConfigError("enabled cache needs a capacity");
  if (table_entry_bytes == 0) throw ConfigError("table entry size must be positive");
}

// ---------------------------------------------------------------------------
// Sinks and sources

void BinaryFileSink::emit(const RecordView& build, const RecordView& probe) {
  scratch_.resize(kRecordHeaderBytes + build.payload.size() + probe.payload.size());
  detail::store_u64(scratch_.data(), static_cast<std::uint64_t>(build.key));
  detail::store_u32(scratch_.data() + 8, static_cast<std::uint32_t>(build.payload.size() + probe.payload.size()));
  std::copy(build.payload.begin(), build.payload.end(), scratch_.begin() + kRecordHeaderBytes);
  std::copy(probe.payload.begin(), probe.payload.end(),
            scratch_.begin() + static_cast<std::ptrdiff_t>(kRecordHeaderBytes + build.payload.size()));
  out_.write(reinterpret_cast<const char*>(scratch_.data()), static_cast<std::streamsize>(scratch_.size()));
}

bool BufferSource::next(RecordView& out) {
  if (!cursor_.next(out)) return false;
  const std::size_t size = out.serialized_size();
  if (frames_ == 0 || fill_ + size > frame_bytes_) {
    ++frames_;
    fill_ = size;
  } else {
    fill_ += size;
  }
  return true;
}

void BufferSource::rewind() {
  cursor_.rewind();
  fill_ = 0;
  frames_ = 0;
}

SpillSource::SpillSource(std::shared_ptr<SpillFile> file, IoLedger& ledger, std::size_t frame_bytes)
    : file_(std::move(file)), ledger_(&ledger), frame_(std::vector<std::uint8_t>(frame_bytes)) {}

bool SpillSource::next(RecordView& out) {
  while (!loaded_ || offset_ >= frame_.used()) {
    if (next_frame_ >= file_->frame_count()) return false;
    file_->read(next_frame_++, frame_);
    ledger_->record_read(1);
    offset_ = 0;
    loaded_ = true;
  }
  out = read_record(frame_.contents(), offset_);
  return true;
}

void SpillSource::rewind() {
  next_frame_ = 0;
  offset_ = 0;
  loaded_ = false;
}

// ---------------------------------------------------------------------------
// Hashing

std::size_t split(std::int64_t key, std::size_t partitions, std::uint32_t round) noexcept {
  const std::uint64_t salt = mix64(0x243f6a8885a308d3ULL + round);
  const std::uint64_t h = mix64(static_cast<std::uint64_t>(key) ^ salt);
  return static_cast<std::size_t>((static_cast<__uint128_t>(h) * partitions) >> 64);
}

std::size_t estimate_table_frames(std::uint64_t record_count, std::size_t bytes_per_entry,
                                  std::size_t frame_bytes) noexcept {
  const std::uint64_t bytes = record_count * bytes_per_entry;
  return static_cast<std::size_t>((bytes + frame_bytes - 1) / frame_bytes);
}

std::uint64_t HashTable::hash(std::int64_t key) noexcept {
  return mix64(static_cast<std::uint64_t>(key) + 0x13198a2e03707344ULL);
}

void HashTable::build(std::vector<const Frame*> frames) {
  clear();
  frames_ = std::move(frames);
  std::size_t n = 0;
  for (const Frame* f : frames_) n += f->records();
  std::size_t buckets = 1;
  while (buckets * 4 < n) buckets <<= 1;
  mask_ = buckets - 1;

  offsets_.assign(buckets + 1, 0);
  auto for_each_record = [&](auto&& fn) {
    for (std::uint32_t fi = 0; fi < frames_.size(); ++fi) {
      const auto bytes = frames_[fi]->contents();
      std::size_t off = 0;
      while (off < bytes.size()) {
        const auto at = static_cast<std::uint32_t>(off);
        const RecordView r = read_record(bytes, off);
        fn(fi, at, hash(r.key));
      }
    }
  };
  for_each_record([&](std::uint32_t, std::uint32_t, std::uint64_t h) { ++offsets_[(h & mask_) + 1]; });
  for (std::size_t b = 0; b < buckets; ++b) offsets_[b + 1] += offsets_[b];
  entries_.resize(n);
  std::vector<std::uint32_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for_each_record([&](std::uint32_t fi, std::uint32_t at, std::uint64_t h) {
    entries_[cursor[h & mask_]++] = Entry{static_cast<std::uint32_t>(h >> 32), fi, at};
  });
}

std::size_t HashTable::memory_bytes() const noexcept {
  return entries_.capacity() * sizeof(Entry) + offsets_.capacity() * sizeof(std::uint32_t) +
         frames_.capacity() * sizeof(const Frame*);
}

void HashTable::clear() noexcept {
  frames_.clear();
  entries_.clear();
  offsets_.clear();
  mask_ = 0;
}

// ---------------------------------------------------------------------------
// Block nested loop join

std::uint64_t bnlj(RecordSource& outer, RecordSource& inner, std::size_t memory_frames, std::size_t frame_bytes,
                   JoinSink& sink) {
  if (memory_frames < 3) throw ConfigError("block nested loop join needs at least 3 memory frames");
  FramePool pool(memory_frames - 2, frame_bytes);
  std::vector<Frame> block;
  std::uint64_t count = 0;

  auto join_block = [&] {
    if (block.empty()) return;
    inner.rewind();
    RecordView s;
    while (inner.next(s)) {
      for (const Frame& f : block) {
        const auto bytes = f.contents();
        std::size_t off = 0;
        while (off < bytes.size()) {
          const RecordView r = read_record(bytes, off);
          if (r.key == s.key) {
            sink.emit(r, s);
            ++count;
          }
        }
      }
    }
    for (Frame& f : block) pool.release(std::move(f));
    block.clear();
  };

  outer.rewind();
  RecordView r;
  while (outer.next(r)) {
    if (r.serialized_size() > frame_bytes) throw UnsupportedRecord("record larger than a frame");
    if (!block.empty() && block.back().append(r)) continue;
    auto frame = pool.allocate();
    if (!frame) {
      join_block();
      frame = pool.allocate();
    }
    block.push_back(std::move(*frame));
    block.back().append(r);
  }
  join_block();
  return count;
}

// ---------------------------------------------------------------------------
// Dynamic hybrid hash join

namespace {

// Restores caller orientation after role reversal and counts results.
class OrientedSink final : public JoinSink {
 public:
  OrientedSink(JoinSink& inner, bool swapped) : inner_(inner), swapped_(swapped) {}
  void emit(const RecordView& build, const RecordView& probe) override {
    ++count_;
    if (swapped_)
      inner_.emit(probe, build);
    else
      inner_.emit(build, probe);
  }
  std::uint64_t count() const noexcept { return count_; }

 private:
  JoinSink& inner_;
  bool swapped_;
  std::uint64_t count_ = 0;
};

constexpr std::size_t kNoPartition = std::numeric_limits<std::size_t>::max();

}  // namespace

struct HybridHashJoin::Task {
  std::shared_ptr<RecordSource> build;
  std::shared_ptr<RecordSource> probe;
  std::uint32_t round = 1;
  bool swapped = false;
  std::optional<std::uint64_t> prev_build_frames;
  std::string lineage;
};

// One partitioned round: build with dynamic destaging, end-of-build memory
// fitting (+ optional reload), probe, and the spilled pairs left over.
class HybridHashJoin::Round {
 public:
  Round(HybridHashJoin& engine, Task& task, std::size_t partitions)
      : engine_(engine),
        cfg_(engine.config_),
        task_(task),
        ledger_(engine.stats_.io),
        pool_(cfg_.memory_frames - 1, cfg_.frame_bytes),
        parts_(partitions) {}

  ~Round() {
    table_.clear();
    for (Partition& p : parts_)
      for (Frame& f : p.frames) pool_.release(std::move(f));
  }

  void build() {
    RecordView r;
    while (task_.build->next(r)) insert(r);
    build_frames_ = task_.build->known_frames().value_or(task_.build->frames_consumed());
  }

  void finish_build() {
    if (task_.round == 1) {
      std::vector<FrameFill> fills;
      for (const Partition& p : parts_)
        for (const Frame& f : p.frames) fills.push_back({f.used(), f.capacity()});
      engine_.stats_.first_round_fullness = average_frame_fullness(fills);
    }

    for (std::size_t id = 0; id < parts_.size(); ++id) {
      Partition& p = parts_[id];
      if (!p.spilled || p.frames.empty()) continue;
      if (cfg_.growth == GrowthPolicy::NGNS) {
        if (!p.frames.front().empty()) write_frames(id, Phase::Build, std::span(p.frames).first(1));
        p.frames.front().clear();
        p.bytes = p.records = 0;
      } else {
        write_frames(id, Phase::Build, p.frames);
        release_frames(p, 0);
      }
    }

    // Resident data, its hash table and one output buffer per spilled
    // partition must fit next to the input frame.
    for (;;) {
      const std::size_t table = estimate_table_frames(resident_records(), cfg_.table_entry_bytes, cfg_.frame_bytes);
      std::size_t buffers = 0;
      for (const Partition& p : parts_)
        if (p.spilled && p.frames.empty()) ++buffers;
      if (table + buffers <= pool_.available()) break;
      const double overflow = static_cast<double>(pool_.allocated() + table + buffers) -
                              static_cast<double>(pool_.budget());
      const auto victim = pick_victim(kNoPartition, GrowthPolicy::NGNS, overflow);
      if (!victim) throw InternalError("cannot fit the hash table in memory");
      Partition& v = parts_[*victim];
      mark_spilled(v);
      write_frames(*victim, Phase::Build, v.frames);
      release_frames(v, 0);
    }
    for (Partition& p : parts_) {
      if (!p.spilled) continue;
      if (p.frames.empty()) {
        auto f = pool_.allocate();
        if (!f) throw InternalError("no frame left for a probe output buffer");
        p.frames.push_back(std::move(*f));
      }
      release_frames(p, 1);
      p.frames.front().clear();
      p.views.assign(1, FrameView{0, cfg_.frame_bytes});
      p.bytes = p.records = 0;
    }

    if (task_.round == 1) {
      auto& s = engine_.stats_;
      s.first_round_partitions = parts_.size();
      s.first_round_build_frames = build_frames_;
      s.first_round_resident_frames = resident_frames();
      s.first_round_spilled_partitions = spilled_count_;
    }

    if (cfg_.reload_spilled) reload();

    const std::size_t table = estimate_table_frames(resident_records(), cfg_.table_entry_bytes, cfg_.frame_bytes);
    if (!pool_.reserve(table)) throw InternalError("hash table reservation failed");
    table_reserved_ = table;
    std::vector<const Frame*> frames;
    for (const Partition& p : parts_)
      if (!p.spilled)
        for (const Frame& f : p.frames) frames.push_back(&f);
    table_.build(std::move(frames));
  }

  void probe(JoinSink& sink) {
    RecordView r;
    while (task_.probe->next(r)) {
      const std::size_t id = split(r.key, parts_.size(), task_.round);
      if (!parts_[id].spilled) {
        table_.probe(r.key, [&](const RecordView& b) { sink.emit(b, r); });
      } else {
        if (r.serialized_size() > cfg_.frame_bytes) throw UnsupportedRecord("record larger than a frame");
        append_to_buffer(id, r, Phase::Probe);
      }
    }
    for (std::size_t id = 0; id < parts_.size(); ++id) {
      Partition& p = parts_[id];
      if (p.spilled && !p.frames.front().empty()) {
        write_frames(id, Phase::Probe, std::span(p.frames).first(1));
        p.frames.front().clear();
      }
    }
    pool_.unreserve(table_reserved_);
    table_reserved_ = 0;
  }

  std::vector<Task> children() {
    std::vector<Task> out;
    for (std::size_t id = 0; id < parts_.size(); ++id) {
      Partition& p = parts_[id];
      if (!p.spilled || !p.build_file || !p.probe_file) continue;
      Task t;
      t.build = std::make_shared<SpillSource>(std::move(p.build_file), ledger_, cfg_.frame_bytes);
      t.probe = std::make_shared<SpillSource>(std::move(p.probe_file), ledger_, cfg_.frame_bytes);
      t.round = task_.round + 1;
      t.swapped = task_.swapped;
      t.prev_build_frames = build_frames_;
      t.lineage = task_.lineage.empty() ? std::to_string(id) : task_.lineage + "." + std::to_string(id);
      out.push_back(std::move(t));
    }
    return out;
  }

  const SearchStats& search() const noexcept { return search_; }
  std::size_t spilled_count() const noexcept { return spilled_count_; }
  std::size_t peak() const noexcept { return pool_.peak() + 1; }

 private:
  struct Partition {
    std::vector<Frame> frames;
    std::vector<FrameView> views;
    NextFitCursor cursor;
    bool spilled = false;
    std::uint64_t bytes = 0;
    std::uint64_t records = 0;
    std::shared_ptr<SpillFile> build_file;
    std::shared_ptr<SpillFile> probe_file;
  };

  void insert(const RecordView& r) {
    const std::size_t need = r.serialized_size();
    if (need > cfg_.frame_bytes) throw UnsupportedRecord("record larger than a frame");
    const std::size_t id = split(r.key, parts_.size(), task_.round);
    Partition& part = parts_[id];
    if (part.spilled && cfg_.growth == GrowthPolicy::NGNS) {
      append_to_buffer(id, r, Phase::Build);
      return;
    }
    if (const auto at = choose_frame(cfg_.insertion, part.views, part.cursor, need, engine_.rng_, search_)) {
      put(part, *at, r);
      return;
    }
    for (;;) {
      if (auto f = pool_.allocate()) {
        part.frames.push_back(std::move(*f));
        part.views.push_back(FrameView{part.frames.size() - 1, cfg_.frame_bytes});
        put(part, part.frames.size() - 1, r);
        return;
      }
      const auto victim = pick_victim(id, cfg_.growth, 0.0);
      if (!victim) throw InternalError("no victim partition and no free frame");
      spill_victim(*victim);
      if (*victim == id && cfg_.growth == GrowthPolicy::NGNS) {
        append_to_buffer(id, r, Phase::Build);
        return;
      }
    }
  }

  void put(Partition& part, std::size_t at, const RecordView& r) {
    part.frames[at].append(r);
    part.views[at].free = part.frames[at].free();
    part.bytes += r.serialized_size();
    ++part.records;
    part.cursor.record(at, r.serialized_size());
  }

  void append_to_buffer(std::size_t id, const RecordView& r, Phase phase) {
    Partition& part = parts_[id];
    Frame& buf = part.frames.front();
    if (!buf.append(r)) {
      write_frames(id, phase, std::span(part.frames).first(1));
      buf.clear();
      part.bytes = part.records = 0;
      buf.append(r);
    }
    part.bytes += r.serialized_size();
    ++part.records;
    part.views.front().free = buf.free();
  }

  void write_frames(std::size_t id, Phase phase, std::span<const Frame> frames) {
    if (frames.empty()) return;
    Partition& part = parts_[id];
    auto& file = phase == Phase::Build ? part.build_file : part.probe_file;
    if (!file) {
      const std::string name = task_.lineage.empty() ? std::to_string(id) : task_.lineage + "." + std::to_string(id);
      file = engine_.store_->create(task_.round, phase == Phase::Build ? 'b' : 'p', name);
    }
    const std::uint64_t offset = file->append(frames);
    ledger_.record_write(WriteEvent{file->id(), offset, frames.size(), phase, task_.round});
  }

  void release_frames(Partition& p, std::size_t keep) {
    while (p.frames.size() > keep) {
      pool_.release(std::move(p.frames.back()));
      p.frames.pop_back();
    }
    p.views.resize(p.frames.size());
    for (std::size_t i = 0; i < p.views.size(); ++i) p.views[i] = FrameView{i, p.frames[i].free()};
    p.bytes = 0;
    p.records = 0;
    for (const Frame& f : p.frames) {
      p.bytes += f.used();
      p.records += f.records();
    }
    p.cursor.reset();
  }

  void mark_spilled(Partition& p) {
    if (!p.spilled) {
      p.spilled = true;
      ++spilled_count_;
    }
  }

  // Writes the victim's in-memory frames as one event. NG-NS keeps one frame
  // as the partition's output buffer; G-S gives every frame back.
  void spill_victim(std::size_t id) {
    Partition& v = parts_[id];
    mark_spilled(v);
    write_frames(id, Phase::Build, v.frames);
    if (cfg_.growth == GrowthPolicy::NGNS) {
      release_frames(v, 1);
      v.frames.front().clear();
      v.views.front().free = cfg_.frame_bytes;
      v.bytes = v.records = 0;
    } else {
      release_frames(v, 0);
    }
  }

  std::optional<std::size_t> pick_victim(std::size_t incoming, GrowthPolicy eligibility, double overflow) {
    std::vector<PartitionSnapshot> snaps(parts_.size());
    for (std::size_t id = 0; id < parts_.size(); ++id) {
      const Partition& p = parts_[id];
      auto& s = snaps[id];
      s.id = id;
      s.frames_in_memory = p.frames.size();
      s.bytes_in_memory = p.bytes;
      s.records_in_memory = p.records;
      s.spilled = p.spilled;
      s.fragmentation_bytes = p.frames.size() * cfg_.frame_bytes - p.bytes;
    }
    if (cfg_.best_match && task_.round >= 2) return best_match(snaps, eligibility, overflow);
    return engine_.selector_.select(eligibility, snaps, incoming, engine_.rng_);
  }

  // Known sizes: spill the partition whose in-memory size is closest to the
  // amount of build data that will not fit.
  std::optional<std::size_t> best_match(std::span<const PartitionSnapshot> snaps, GrowthPolicy eligibility,
                                        double overflow) {
    const auto eligible = VictimSelector::eligible(eligibility, snaps);
    if (eligible.empty()) return std::nullopt;
    double target = overflow;
    if (eligibility == cfg_.growth && target == 0.0) {
      const auto known = task_.build->known_frames().value_or(0);
      const auto consumed = task_.build->frames_consumed();
      const double remaining = known > consumed ? static_cast<double>(known - consumed) : 0.0;
      target = remaining + static_cast<double>(pool_.allocated()) - static_cast<double>(pool_.budget());
    }
    const PartitionSnapshot* best = nullptr;
    double best_gap = 0;
    for (const auto* s : eligible) {
      const double gap = std::abs(static_cast<double>(s->frames_in_memory) - target);
      if (best == nullptr || gap < best_gap) {
        best = s;
        best_gap = gap;
      }
    }
    return best->id;
  }

  std::uint64_t resident_records() const {
    std::uint64_t n = 0;
    for (const Partition& p : parts_)
      if (!p.spilled) n += p.records;
    return n;
  }

  std::uint64_t resident_frames() const {
    std::uint64_t n = 0;
    for (const Partition& p : parts_)
      if (!p.spilled) n += p.frames.size();
    return n;
  }

  // Brings back spilled build partitions, smallest first, while they and
  // the grown hash table fit in the leftover memory.
  void reload() {
    std::vector<std::size_t> order;
    for (std::size_t id = 0; id < parts_.size(); ++id)
      if (parts_[id].spilled && parts_[id].build_file) order.push_back(id);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return parts_[a].build_file->frame_count() < parts_[b].build_file->frame_count();
    });
    std::uint64_t records = resident_records();
    for (std::size_t id : order) {
      Partition& p = parts_[id];
      const std::uint64_t frames = p.build_file->frame_count();
      const std::uint64_t grown = records + p.build_file->record_count();
      const std::size_t table = estimate_table_frames(grown, cfg_.table_entry_bytes, cfg_.frame_bytes);
      // The partition hands back its output buffer.
      if (pool_.allocated() - 1 + frames + table > pool_.budget()) continue;
      release_frames(p, 0);
      for (std::uint64_t i = 0; i < frames; ++i) {
        auto f = pool_.allocate();
        if (!f) throw InternalError("reload ran out of frames");
        p.build_file->read(i, *f);
        ledger_.record_read(1);
        p.frames.push_back(std::move(*f));
      }
      release_frames(p, p.frames.size());  // refresh views and counters
      p.spilled = false;
      p.build_file.reset();
      records = grown;
      ++engine_.stats_.reloads;
    }
  }

  HybridHashJoin& engine_;
  const JoinConfig& cfg_;
  Task& task_;
  IoLedger& ledger_;
  FramePool pool_;
  std::vector<Partition> parts_;
  HashTable table_;
  std::size_t table_reserved_ = 0;
  SearchStats search_;
  std::size_t spilled_count_ = 0;
  std::uint64_t build_frames_ = 0;
};

HybridHashJoin::HybridHashJoin(JoinConfig config)
    : config_(std::move(config)), rng_(config_.seed), selector_(config_.victim) {
  config_.validate();
}

HybridHashJoin::~HybridHashJoin() = default;

bool HybridHashJoin::run_in_memory(Task& task, JoinSink& sink) {
  FramePool pool(config_.memory_frames - 1, config_.frame_bytes);
  std::vector<Frame> frames;
  auto release_all = [&] {
    for (Frame& f : frames) pool.release(std::move(f));
    frames.clear();
  };
  std::uint64_t records = 0;
  RecordView r;
  bool fits = true;
  while (fits && task.build->next(r)) {
    if (r.serialized_size() > config_.frame_bytes) throw UnsupportedRecord("record larger than a frame");
    if (!frames.empty() && frames.back().append(r)) {
      ++records;
      continue;
    }
    auto f = pool.allocate();
    if (!f) {
      fits = false;
      break;
    }
    frames.push_back(std::move(*f));
    frames.back().append(r);
    ++records;
  }
  const std::size_t table = estimate_table_frames(records, config_.table_entry_bytes, config_.frame_bytes);
  if (!fits || !pool.reserve(table)) {
    release_all();
    task.build->rewind();
    return false;
  }
  ++stats_.in_memory_shortcuts;
  HashTable ht;
  std::vector<const Frame*> refs;
  for (const Frame& f : frames) refs.push_back(&f);
  ht.build(std::move(refs));
  OrientedSink oriented(sink, task.swapped);
  while (task.probe->next(r)) ht.probe(r.key, [&](const RecordView& b) { oriented.emit(b, r); });
  stats_.output_records += oriented.count();
  stats_.peak_frames = std::max(stats_.peak_frames, pool.peak() + 1);
  ht.clear();
  pool.unreserve(table);
  release_all();
  return true;
}

void HybridHashJoin::run_bnlj(Task& task, JoinSink& sink) {
  ++stats_.bailouts;
  OrientedSink oriented(sink, task.swapped);
  bnlj(*task.build, *task.probe, config_.memory_frames, config_.frame_bytes, oriented);
  stats_.output_records += oriented.count();
  stats_.peak_frames = std::max(stats_.peak_frames, config_.memory_frames);
}

std::vector<HybridHashJoin::Task> HybridHashJoin::process(Task& task, JoinSink& sink) {
  stats_.rounds = std::max(stats_.rounds, task.round);
  if (task.round > config_.max_rounds) {
    if (!config_.bailout) throw InternalError("recursion limit reached with bail-out disabled");
    run_bnlj(task, sink);
    return {};
  }
  if (task.round >= 2) {
    auto build_frames = task.build->known_frames().value_or(0);
    auto probe_frames = task.probe->known_frames().value_or(0);
    if (config_.role_reversal && probe_frames < build_frames) {
      std::swap(task.build, task.probe);
      std::swap(build_frames, probe_frames);
      task.swapped = !task.swapped;
      ++stats_.role_reversals;
    }
    if (config_.in_memory_shortcut &&
        static_cast<double>(build_frames) * config_.fudge <= static_cast<double>(config_.memory_frames) &&
        run_in_memory(task, sink))
      return {};
    if (config_.bailout && task.prev_build_frames &&
        static_cast<double>(build_frames) >
            (1.0 - config_.bailout_threshold) * static_cast<double>(*task.prev_build_frames)) {
      run_bnlj(task, sink);
      return {};
    }
  }

  std::size_t partitions = config_.first_round_partitions();
  if (task.round >= 2 && !config_.fixed_partitions) {
    PartitionCountInput in;
    in.build_frames = task.build->known_frames().value_or(0);
    in.memory_frames = config_.memory_frames;
    in.fudge = config_.fudge;
    in.floor_partitions = config_.floor_partitions;
    in.known_size = true;
    partitions = std::min<std::size_t>(partition_count(in), config_.memory_frames - 1);
  }

  OrientedSink oriented(sink, task.swapped);
  std::vector<Task> children;
  {
    Round round(*this, task, partitions);
    round.build();
    round.finish_build();
    round.probe(oriented);
    stats_.io.flush_cache();
    children = round.children();
    stats_.frames_searched += round.search().frames_searched;
    stats_.inserts += round.search().inserts;
    stats_.spilled_partitions += round.spilled_count();
    stats_.peak_frames = std::max(stats_.peak_frames, round.peak());
  }
  stats_.output_records += oriented.count();
  return children;
}

JoinStats HybridHashJoin::run(RecordSource& build, RecordSource& probe, JoinSink& sink) {
  stats_ = JoinStats{};
  stats_.io = IoLedger(config_.cache);
  rng_ = SplitMix64(config_.seed);
  selector_ = VictimSelector(config_.victim);
  store_ = std::make_unique<SpillStore>(config_.spill_backend, config_.frame_bytes, config_.spill_dir, config_.run_id);

  std::vector<Task> stack;
  Task first;
  first.build = std::shared_ptr<RecordSource>(&build, [](RecordSource*) {});
  first.probe = std::shared_ptr<RecordSource>(&probe, [](RecordSource*) {});
  stack.push_back(std::move(first));
  while (!stack.empty()) {
    Task task = std::move(stack.back());
    stack.pop_back();
    auto children = process(task, sink);
    for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(std::move(*it));
  }
  stats_.io.flush_cache();
  stats_.spilled_build_frames = stats_.io.frames_written(Phase::Build);
  stats_.spilled_probe_frames = stats_.io.frames_written(Phase::Probe);
  store_.reset();
  return std::move(stats_);
}

JoinStats run_join(std::span<const std::uint8_t> build, std::span<const std::uint8_t> probe,
                   const JoinConfig& config, JoinSink& sink) {
  BufferSource b(build, config.frame_bytes);
  BufferSource p(probe, config.frame_bytes);
  HybridHashJoin join(config);
  return join.run(b, p, sink);
}

void write_stats_csv(std::ostream& out, const JoinConfig& config, const JoinStats& stats) {
  out << "memory_frames,frame_bytes,insertion,victim,growth,cache_frames,rounds,partitions,"
         "spilled_partitions,spilled_build_frames,spilled_probe_frames,seq_frames,rand_frames,"
         "frames_read,output_records,frames_searched,inserts,bailouts,role_reversals,reloads,"
         "in_memory_shortcuts,peak_frames,first_round_resident_frames,first_round_fullness\n";
  out << config.memory_frames << ',' << config.frame_bytes << ',' << to_string(config.insertion) << ','
      << to_string(config.victim) << ',' << to_string(config.growth) << ','
      << (config.cache.enabled ? config.cache.capacity_frames : 0) << ',' << stats.rounds << ','
      << stats.first_round_partitions << ',' << stats.spilled_partitions << ',' << stats.spilled_build_frames << ','
      << stats.spilled_probe_frames << ',' << stats.io.seq_frames() << ',' << stats.io.rand_frames() << ','
      << stats.io.total_frames_read() << ',' << stats.output_records << ',' << stats.frames_searched << ','
      << stats.inserts << ',' << stats.bailouts << ',' << stats.role_reversals << ',' << stats.reloads << ','
      << stats.in_memory_shortcuts << ',' << stats.peak_frames << ',' << stats.first_round_resident_frames << ',';
  if (stats.first_round_fullness) out << *stats.first_round_fullness;
  out << '\n';
}

}  // namespace hhj
