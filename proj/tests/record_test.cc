#include "hhj/record.h"

#include <gtest/gtest.h>

#include "hhj/errors.h"

namespace hhj {
namespace {

TEST(Record, LayoutIsLittleEndianKeyLengthPayload) {
  std::vector<std::uint8_t> out;
  const std::uint8_t payload[] = {0xaa, 0xbb};
  append_record(out, 0x0102030405060708LL, payload);
  const std::vector<std::uint8_t> want = {0x08, 0x07, 0x06, 0x05, 0x04, 0x03, 0x02, 0x01,
                                          0x02, 0x00, 0x00, 0x00, 0xaa, 0xbb};
  EXPECT_EQ(out, want);
}

TEST(Record, NegativeKeyRoundTrips) {
  std::vector<std::uint8_t> out;
  append_record(out, -5, {});
  std::size_t off = 0;
  const RecordView v = read_record(out, off);
  EXPECT_EQ(v.key, -5);
  EXPECT_EQ(v.payload.size(), 0u);
  EXPECT_EQ(off, kRecordHeaderBytes);
}

TEST(Record, SerializeParseRoundTrip) {
  std::vector<Record> recs = {{1, {1, 2, 3}}, {2, {}}, {-9, std::vector<std::uint8_t>(1000, 7)}};
  const auto bytes = serialize_records(recs);
  EXPECT_EQ(bytes.size(), 3 * kRecordHeaderBytes + 3 + 1000);
  const auto back = parse_records(bytes);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].key, recs[i].key);
    EXPECT_EQ(back[i].payload, recs[i].payload);
  }
}

TEST(Record, TruncationIsAFormatError) {
  std::vector<std::uint8_t> out;
  append_record(out, 1, std::vector<std::uint8_t>(10, 1));
  out.pop_back();
  std::size_t off = 0;
  EXPECT_THROW(read_record(out, off), FormatError);
  std::vector<std::uint8_t> header_only(5, 0);
  off = 0;
  EXPECT_THROW(read_record(header_only, off), FormatError);
}

TEST(Record, CursorRewinds) {
  const auto bytes = serialize_records(std::vector<Record>{{1, {}}, {2, {}}});
  RecordCursor c(bytes);
  RecordView v;
  int n = 0;
  while (c.next(v)) ++n;
  EXPECT_EQ(n, 2);
  c.rewind();
  ASSERT_TRUE(c.next(v));
  EXPECT_EQ(v.key, 1);
}

}  // namespace
}  // namespace hhj
