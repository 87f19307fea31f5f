#include "hhj/storage.h"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

#include "hhj/errors.h"

namespace hhj {

void Frame::load(std::span<const std::uint8_t> bytes) {
  if (bytes.size() > data_.size()) throw FormatError("frame image larger than frame capacity");
  std::copy(bytes.begin(), bytes.end(), data_.begin());
  used_ = bytes.size();
  records_ = 0;
  std::size_t off = 0;
  while (off < used_) {
    read_record(contents(), off);
    ++records_;
  }
}

FramePool::FramePool(std::size_t budget_frames, std::size_t frame_bytes)
    : budget_(budget_frames), frame_bytes_(frame_bytes) {
  if (frame_bytes_ <= kRecordHeaderBytes) throw ConfigError("frame size too small");
}

void FramePool::check() const {
  if (allocated_ > budget_) throw InternalError("frame pool exceeded its budget");
}

std::optional<Frame> FramePool::allocate() {
  if (allocated_ >= budget_) return std::nullopt;
  ++allocated_;
  peak_ = std::max(peak_, allocated_);
  check();
  if (!spare_.empty()) {
    Frame f(std::move(spare_.back()));
    spare_.pop_back();
    return f;
  }
  return Frame(std::vector<std::uint8_t>(frame_bytes_));
}

void FramePool::release(Frame&& frame) {
  if (allocated_ == 0) throw InternalError("frame released to an empty pool");
  --allocated_;
  auto buf = frame.release_buffer();
  if (buf.size() == frame_bytes_) spare_.push_back(std::move(buf));
}

bool FramePool::reserve(std::size_t frames) {
  if (frames > available()) return false;
  allocated_ += frames;
  peak_ = std::max(peak_, allocated_);
  return true;
}

void FramePool::unreserve(std::size_t frames) {
  if (frames > allocated_) throw InternalError("unreserving more frames than allocated");
  allocated_ -= frames;
}

const char* to_string(Phase p) noexcept { return p == Phase::Build ? "build" : "probe"; }
const char* to_string(WriteClass c) noexcept { return c == WriteClass::Sequential ? "seq" : "rand"; }

void IoLedger::classify(const WriteEvent& event) {
  bool sequential = event.length_frames >= 2;
  if (!sequential && !entries_.empty()) {
    const WriteEvent& prev = entries_.back().event;
    sequential = prev.file_id == event.file_id && prev.offset_frames + prev.length_frames == event.offset_frames;
  }
  const WriteClass cls = sequential ? WriteClass::Sequential : WriteClass::Random;
  entries_.push_back({event, cls});
  const bool build = event.phase == Phase::Build;
  if (sequential) {
    seq_ += event.length_frames;
    (build ? build_seq_ : probe_seq_) += event.length_frames;
  } else {
    rand_ += event.length_frames;
    (build ? build_rand_ : probe_rand_) += event.length_frames;
  }
}

void IoLedger::record_write(const WriteEvent& event) {
  if (event.length_frames == 0) throw std::invalid_argument("write event must span at least one frame");
  (event.phase == Phase::Build ? build_written_ : probe_written_) += event.length_frames;
  if (!cache_.enabled) {
    classify(event);
    return;
  }
  pending_.push_back(event);
  pending_frames_ += event.length_frames;
  if (pending_frames_ >= cache_.capacity_frames) flush_cache();
}

void IoLedger::flush_cache() {
  if (pending_.empty()) return;
  std::stable_sort(pending_.begin(), pending_.end(), [](const WriteEvent& a, const WriteEvent& b) {
    if (a.file_id != b.file_id) return a.file_id < b.file_id;
    return a.offset_frames < b.offset_frames;
  });
  WriteEvent run = pending_.front();
  for (std::size_t i = 1; i < pending_.size(); ++i) {
    const WriteEvent& e = pending_[i];
    const bool contiguous = e.file_id == run.file_id && run.offset_frames + run.length_frames == e.offset_frames &&
                            e.phase == run.phase && e.round == run.round;
    if (contiguous) {
      run.length_frames += e.length_frames;
    } else {
      classify(run);
      run = e;
    }
  }
  classify(run);
  pending_.clear();
  pending_frames_ = 0;
}

void IoLedger::write_csv(std::ostream& out) const {
  out << "event_index,file_id,offset,length,phase,round,class\n";
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& [e, cls] = entries_[i];
    out << i << ',' << e.file_id << ',' << e.offset_frames << ',' << e.length_frames << ',' << to_string(e.phase)
        << ',' << e.round << ',' << to_string(cls) << '\n';
  }
}

SpillFile::SpillFile(std::uint32_t id, std::string name, std::size_t frame_bytes,
                     std::optional<std::filesystem::path> path)
    : id_(id), name_(std::move(name)), frame_bytes_(frame_bytes), path_(std::move(path)) {
  if (path_) {
    stream_.open(*path_, std::ios::in | std::ios::out | std::ios::binary | std::ios::trunc);
    if (!stream_) throw std::runtime_error("cannot create spill file " + path_->string());
  }
}

SpillFile::~SpillFile() { discard(); }

void SpillFile::discard() {
  if (path_) {
    stream_.close();
    std::error_code ec;
    std::filesystem::remove(*path_, ec);
    path_.reset();
  }
  memory_.clear();
  memory_.shrink_to_fit();
  starts_.clear();
}

std::uint64_t SpillFile::append(std::span<const Frame> frames) {
  const std::uint64_t offset = used_.size();
  for (const Frame& f : frames) {
    used_.push_back(static_cast<std::uint32_t>(f.used()));
    records_ += f.records();
    bytes_ += f.used();
    if (path_) {
      stream_.seekp(static_cast<std::streamoff>((used_.size() - 1) * frame_bytes_));
      stream_.write(reinterpret_cast<const char*>(f.raw().data()), static_cast<std::streamsize>(frame_bytes_));
      if (!stream_) throw std::runtime_error("write failed on " + name_);
    } else {
      starts_.push_back(memory_.size());
      memory_.insert(memory_.end(), f.contents().begin(), f.contents().end());
    }
  }
  return offset;
}

void SpillFile::read(std::uint64_t index, Frame& into) {
  if (index >= used_.size()) throw std::out_of_range("spill frame index out of range");
  const std::size_t used = used_[index];
  if (path_) {
    std::vector<std::uint8_t> buf(used);
    stream_.seekg(static_cast<std::streamoff>(index * frame_bytes_));
    stream_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(used));
    if (!stream_) throw std::runtime_error("read failed on " + name_);
    into.load(buf);
  } else {
    into.load(std::span(memory_).subspan(starts_[index], used));
  }
}

std::filesystem::path default_spill_dir() {
  if (const char* env = std::getenv("HHJ_TMPDIR"); env != nullptr && *env != '\0') return env;
  return std::filesystem::temp_directory_path();
}

SpillStore::SpillStore(SpillBackend backend, std::size_t frame_bytes, std::filesystem::path base_dir,
                       std::string run_id)
    : backend_(backend), frame_bytes_(frame_bytes) {
  if (backend_ == SpillBackend::Disk) {
    if (base_dir.empty()) base_dir = default_spill_dir();
    dir_ = base_dir / run_id;
    std::filesystem::create_directories(dir_);
  }
}

SpillStore::~SpillStore() {
  if (backend_ == SpillBackend::Disk && !dir_.empty()) {
    std::error_code ec;
    std::filesystem::remove(dir_, ec);  // only succeeds once every file is gone
  }
}

std::string SpillStore::file_name(std::uint32_t round, char side, const std::string& partition) {
  return "r" + std::to_string(round) + "_" + side + "_" + partition + ".spill";
}

std::shared_ptr<SpillFile> SpillStore::create(std::uint32_t round, char side, const std::string& partition) {
  std::string name = file_name(round, side, partition);
  std::optional<std::filesystem::path> path;
  if (backend_ == SpillBackend::Disk) path = dir_ / name;
  return std::make_shared<SpillFile>(next_id_++, std::move(name), frame_bytes_, std::move(path));
}

}  // namespace hhj
