#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "hhj/errors.h"

namespace hhj {

// On-disk and in-frame record layout, all little-endian:
//   key (int64) | payload_length (uint32) | payload bytes
inline constexpr std::size_t kRecordHeaderBytes = 12;

struct Record {
  std::int64_t key = 0;
  std::vector<std::uint8_t> payload;

  std::size_t serialized_size() const noexcept { return kRecordHeaderBytes + payload.size(); }
};

// Non-owning view of a serialized record.
struct RecordView {
  std::int64_t key = 0;
  std::span<const std::uint8_t> payload;

  std::size_t serialized_size() const noexcept { return kRecordHeaderBytes + payload.size(); }
};

namespace detail {

inline void store_u32(std::uint8_t* out, std::uint32_t v) noexcept {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline void store_u64(std::uint8_t* out, std::uint64_t v) noexcept {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint32_t load_u32(const std::uint8_t* in) noexcept {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | in[i];
  return v;
}

inline std::uint64_t load_u64(const std::uint8_t* in) noexcept {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | in[i];
  return v;
}

}  // namespace detail

// Writes `rec` at `out`, which must have room for rec.serialized_size() bytes.
inline void write_record(std::uint8_t* out, std::int64_t key, std::span<const std::uint8_t> payload) noexcept {
  detail::store_u64(out, static_cast<std::uint64_t>(key));
  detail::store_u32(out + 8, static_cast<std::uint32_t>(payload.size()));
  if (!payload.empty()) std::memcpy(out + kRecordHeaderBytes, payload.data(), payload.size());
}

inline void append_record(std::vector<std::uint8_t>& out, std::int64_t key, std::span<const std::uint8_t> payload) {
  const std::size_t at = out.size();
  out.resize(at + kRecordHeaderBytes + payload.size());
  write_record(out.data() + at, key, payload);
}

// Parses the record starting at bytes[offset]. Returns the view and advances
// offset, or throws FormatError on truncation.
inline RecordView read_record(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  if (bytes.size() - offset < kRecordHeaderBytes) throw FormatError("truncated record header");
  const std::uint8_t* p = bytes.data() + offset;
  RecordView view;
  view.key = static_cast<std::int64_t>(detail::load_u64(p));
  const std::uint32_t len = detail::load_u32(p + 8);
  if (bytes.size() - offset - kRecordHeaderBytes < len) throw FormatError("truncated record payload");
  view.payload = bytes.subspan(offset + kRecordHeaderBytes, len);
  offset += kRecordHeaderBytes + len;
  return view;
}

// Iterates a buffer in the binary dataset format.
class RecordCursor {
 public:
  explicit RecordCursor(std::span<const std::uint8_t> bytes) noexcept : bytes_(bytes) {}

  bool next(RecordView& out) {
    if (offset_ >= bytes_.size()) return false;
    out = read_record(bytes_, offset_);
    return true;
  }

  void rewind() noexcept { offset_ = 0; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

// Decodes a whole buffer. Intended for tests and small inputs.
inline std::vector<Record> parse_records(std::span<const std::uint8_t> bytes) {
  std::vector<Record> out;
  RecordCursor cursor(bytes);
  RecordView view;
  while (cursor.next(view)) out.push_back(Record{view.key, {view.payload.begin(), view.payload.end()}});
  return out;
}

inline std::vector<std::uint8_t> serialize_records(std::span<const Record> records) {
  std::vector<std::uint8_t> out;
  for (const Record& r : records) append_record(out, r.key, r.payload);
  return out;
}

}  // namespace hhj
