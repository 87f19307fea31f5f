#include "hhj/engine.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "hhj/acceptance.h"
#include "hhj/datagen.h"
#include "hhj/errors.h"

namespace hhj {
namespace {

std::vector<std::uint8_t> relation(std::initializer_list<std::pair<std::int64_t, const char*>> rows) {
  std::vector<std::uint8_t> out;
  for (const auto& [k, s] : rows) {
    const std::string p(s);
    append_record(out, k, std::span(reinterpret_cast<const std::uint8_t*>(p.data()), p.size()));
  }
  return out;
}

std::vector<std::uint8_t> uniform(std::uint64_t frames, std::size_t frame_bytes, std::uint64_t seed,
                                  const RecordSizeSpec& sizes = RecordSizeSpec::all_small()) {
  return generate_dataset(dataset_for_frames(sizes, KeyDistribution::unique(), frames, frame_bytes, seed)).bytes;
}

// Random keys drawn with repetition from [1, key_range].
std::vector<std::uint8_t> random_keys(std::size_t n, std::int64_t key_range, std::uint64_t seed,
                                      std::size_t max_payload = 200) {
  SplitMix64 rng(seed);
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> payload;
  for (std::size_t i = 0; i < n; ++i) {
    payload.resize(rng.below(max_payload + 1));
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng.next());
    append_record(out, rng.uniform(1, key_range), payload);
  }
  return out;
}

JoinConfig small_config(std::size_t memory) {
  JoinConfig cfg;
  cfg.frame_bytes = 4096;
  cfg.memory_frames = memory;
  return cfg;
}

std::size_t frames_of(const std::vector<std::uint8_t>& bytes, std::size_t frame_bytes) {
  return (bytes.size() + frame_bytes - 1) / frame_bytes;
}

TEST(Join, TrivialInMemory) {
  const auto b = relation({{1, "a"}, {2, "b"}});
  const auto p = relation({{1, "x"}, {3, "y"}});
  std::vector<std::pair<std::string, std::string>> got;
  CallbackSink sink([&](const RecordView& l, const RecordView& r) {
    got.emplace_back(std::string(l.payload.begin(), l.payload.end()), std::string(r.payload.begin(), r.payload.end()));
  });
  const JoinStats st = run_join(b, p, JoinConfig{}, sink);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0], std::make_pair(std::string("a"), std::string("x")));
  EXPECT_EQ(st.rounds, 1u);
  EXPECT_EQ(st.io.total_frames_written(), 0u);
  EXPECT_EQ(st.output_records, 1u);
}

TEST(Join, EmptyInputs) {
  const auto some = relation({{1, "a"}});
  CountingSink sink;
  EXPECT_EQ(run_join({}, some, JoinConfig{}, sink).output_records, 0u);
  EXPECT_EQ(run_join(some, {}, JoinConfig{}, sink).output_records, 0u);
  EXPECT_EQ(sink.count(), 0u);
}

TEST(Join, OversizedRecordIsUnsupported) {
  std::vector<std::uint8_t> b;
  append_record(b, 1, std::vector<std::uint8_t>(5000, 0));
  CountingSink sink;
  EXPECT_THROW(run_join(b, b, small_config(16), sink), UnsupportedRecord);
}

TEST(Join, ConfigValidation) {
  JoinConfig cfg;
  cfg.memory_frames = 2;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = JoinConfig{};
  cfg.bailout_threshold = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = JoinConfig{};
  cfg.fixed_partitions = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

struct Combo {
  InsertionPolicy insertion;
  VictimKind victim;
  GrowthPolicy growth;
};

TEST(Join, MatchesOracleAcrossPolicies) {
  SplitMix64 rng(2024);
  const auto policies = all_insertion_policies();
  const auto victims = all_victim_kinds();
  for (int i = 0; i < 60; ++i) {
    const std::size_t nb = 1000 + rng.below(5000);
    const std::size_t np = 1000 + rng.below(5000);
    const auto range = static_cast<std::int64_t>(nb / (1 + rng.below(3)));
    const auto b = random_keys(nb, range, rng.next());
    const auto p = random_keys(np, range, rng.next());
    JoinConfig cfg = small_config(std::max<std::size_t>(4, frames_of(b, 4096) / (2 + rng.below(5))));
    cfg.insertion = policies[i % policies.size()];
    cfg.victim = victims[i % victims.size()];
    cfg.growth = i % 2 ? GrowthPolicy::GS : GrowthPolicy::NGNS;
    cfg.best_match = rng.bernoulli(0.5);
    cfg.reload_spilled = rng.bernoulli(0.5);
    cfg.role_reversal = rng.bernoulli(0.5);
    cfg.seed = rng.next();
    oracle::CollectingSink sink;
    const JoinStats st = run_join(b, p, cfg, sink);
    const auto want = oracle::sort_merge(b, p);
    ASSERT_EQ(sink.sorted(), want) << "case " << i << " " << to_string(cfg.insertion) << " "
                                   << to_string(cfg.victim) << " " << to_string(cfg.growth);
    ASSERT_EQ(st.output_records, want.size());
    ASSERT_LE(st.peak_frames, cfg.memory_frames);
    ASSERT_EQ(st.spilled_build_frames, st.io.frames_written(Phase::Build));
    ASSERT_EQ(st.spilled_probe_frames, st.io.frames_written(Phase::Probe));
  }
}

TEST(Join, SortMergeAgreesWithNestedLoop) {
  const auto b = random_keys(400, 50, 1);
  const auto p = random_keys(300, 50, 2);
  EXPECT_EQ(oracle::sort_merge(b, p), oracle::nested_loop(b, p));
}

TEST(Join, DiskBackendMatchesMemoryBackend) {
  const auto b = random_keys(4000, 3000, 11);
  const auto p = random_keys(4000, 3000, 12);
  JoinConfig cfg = small_config(8);
  cfg.spill_backend = SpillBackend::Disk;
  cfg.spill_dir = std::filesystem::temp_directory_path() / "hhj_engine_test";
  cfg.run_id = "disk";
  oracle::CollectingSink disk_sink;
  const JoinStats disk = run_join(b, p, cfg, disk_sink);
  cfg.spill_backend = SpillBackend::Memory;
  oracle::CollectingSink mem_sink;
  const JoinStats mem = run_join(b, p, cfg, mem_sink);
  EXPECT_EQ(disk_sink.sorted(), mem_sink.sorted());
  EXPECT_EQ(disk.io.total_frames_written(), mem.io.total_frames_written());
  EXPECT_GT(disk.io.total_frames_written(), 0u);
  EXPECT_FALSE(std::filesystem::exists(cfg.spill_dir / "disk"));
}

TEST(Join, EqualKeysBailOut) {
  // Build four times the memory, every key identical.
  std::vector<std::uint8_t> b, p;
  for (int i = 0; i < 400; ++i) append_record(b, 7, std::vector<std::uint8_t>(150, static_cast<std::uint8_t>(i)));
  for (int i = 0; i < 30; ++i) append_record(p, 7, std::vector<std::uint8_t>(20, static_cast<std::uint8_t>(i)));
  JoinConfig cfg = small_config(std::max<std::size_t>(4, frames_of(b, 4096) / 4));
  cfg.role_reversal = false;
  oracle::CollectingSink sink;
  const JoinStats st = run_join(b, p, cfg, sink);
  EXPECT_EQ(st.bailouts, 1u);
  EXPECT_EQ(st.output_records, 400u * 30u);
  EXPECT_EQ(sink.sorted(), oracle::sort_merge(b, p));
}

TEST(Join, NoBailOutMeansInternalError) {
  std::vector<std::uint8_t> b;
  for (int i = 0; i < 400; ++i) append_record(b, 7, std::vector<std::uint8_t>(150, 1));
  JoinConfig cfg = small_config(4);
  cfg.bailout = false;
  cfg.role_reversal = false;
  cfg.max_rounds = 4;
  CountingSink sink;
  EXPECT_THROW(run_join(b, b, cfg, sink), InternalError);
}

TEST(Join, RoleReversalSavesIo) {
  const auto b = uniform(64, 4096, 5);
  // Probe shares the build keys but is a quarter of the size.
  std::vector<std::uint8_t> p;
  RecordCursor c(b);
  RecordView v;
  for (int i = 0; c.next(v); ++i)
    if (i % 4 == 0) append_record(p, v.key, v.payload.subspan(0, 100));
  JoinConfig cfg = small_config(12);
  cfg.fixed_partitions = 4;
  cfg.role_reversal = true;
  oracle::CollectingSink on_sink;
  const JoinStats on = run_join(b, p, cfg, on_sink);
  cfg.role_reversal = false;
  oracle::CollectingSink off_sink;
  const JoinStats off = run_join(b, p, cfg, off_sink);
  EXPECT_GE(on.role_reversals, 1u);
  EXPECT_EQ(off.role_reversals, 0u);
  EXPECT_EQ(on_sink.sorted(), off_sink.sorted());
  const auto traffic = [](const JoinStats& s) { return s.io.total_frames_read() + s.io.total_frames_written(); };
  EXPECT_LE(traffic(on), traffic(off));
}

TEST(Join, InMemoryShortcutSkipsPartitioning) {
  const auto b = uniform(40, 4096, 6);
  JoinConfig cfg = small_config(24);
  cfg.in_memory_shortcut = true;
  CountingSink sink;
  const JoinStats st = run_join(b, b, cfg, sink);
  EXPECT_GE(st.rounds, 2u);
  EXPECT_GE(st.in_memory_shortcuts, 1u);
  for (const auto& e : st.io.entries()) EXPECT_EQ(e.event.round, 1u);
  EXPECT_EQ(st.output_records, sink.count());
}

TEST(Join, PeakNeverExceedsMemory) {
  for (std::size_t m : {4u, 5u, 9u, 17u, 40u}) {
    const auto b = random_keys(3000, 2500, m);
    JoinConfig cfg = small_config(m);
    cfg.growth = m % 2 ? GrowthPolicy::GS : GrowthPolicy::NGNS;
    CountingSink sink;
    const JoinStats st = run_join(b, b, cfg, sink);
    EXPECT_LE(st.peak_frames, m);
  }
}

// Ledger events per spill file in one run, build phase only.
std::map<std::uint32_t, std::vector<std::uint64_t>> build_events(const JoinStats& st) {
  std::map<std::uint32_t, std::vector<std::uint64_t>> out;
  for (const auto& e : st.io.entries())
    if (e.event.phase == Phase::Build && e.event.round == 1) out[e.event.file_id].push_back(e.event.length_frames);
  return out;
}

TEST(Join, NgnsSpillsOnceThenSingleFrames) {
  const auto b = uniform(256, kDefaultFrameBytes, 8);
  JoinConfig cfg;
  cfg.memory_frames = 128;
  cfg.fixed_partitions = 20;
  cfg.growth = GrowthPolicy::NGNS;
  CountingSink sink;
  const JoinStats st = run_join(b, b, cfg, sink);
  const auto files = build_events(st);
  ASSERT_FALSE(files.empty());
  for (const auto& [id, lengths] : files) {
    EXPECT_GE(lengths.front(), 2u) << "file " << id;
    for (std::size_t i = 1; i < lengths.size(); ++i) EXPECT_EQ(lengths[i], 1u) << "file " << id;
  }
}

TEST(Join, GrowStealWritesChunksFromSpilledPartitions) {
  const auto b = uniform(256, kDefaultFrameBytes, 8);
  JoinConfig cfg;
  cfg.memory_frames = 128;
  cfg.fixed_partitions = 20;
  cfg.growth = GrowthPolicy::GS;
  CountingSink sink;
  const JoinStats st = run_join(b, b, cfg, sink);
  std::size_t later_chunks = 0;
  for (const auto& [id, lengths] : build_events(st))
    for (std::size_t i = 1; i < lengths.size(); ++i) later_chunks += lengths[i] >= 2 ? 1 : 0;
  EXPECT_GT(later_chunks, 0u);
}

TEST(Bnlj, EmptyOuter) {
  const auto inner = relation({{1, "a"}});
  BufferSource o({}, 4096), i(inner, 4096);
  CountingSink sink;
  EXPECT_EQ(bnlj(o, i, 4, 4096, sink), 0u);
}

TEST(Bnlj, DistinctKeysNoMatches) {
  std::vector<std::uint8_t> a, b;
  for (int k = 0; k < 10; ++k) {
    append_record(a, k, {});
    append_record(b, k + 100, {});
  }
  BufferSource o(a, 4096), i(b, 4096);
  CountingSink sink;
  EXPECT_EQ(bnlj(o, i, 4, 4096, sink), 0u);
}

TEST(Bnlj, MatchesNestedLoopOracle) {
  const auto a = random_keys(500, 100, 31);
  const auto b = random_keys(500, 100, 32);
  BufferSource o(a, 4096), i(b, 4096);
  oracle::CollectingSink sink;
  const auto n = bnlj(o, i, 4, 4096, sink);
  const auto want = oracle::nested_loop(a, b);
  EXPECT_EQ(n, want.size());
  EXPECT_EQ(sink.sorted(), want);
}

TEST(TableEstimate, Examples) {
  EXPECT_EQ(estimate_table_frames(0), 0u);
  EXPECT_EQ(estimate_table_frames(2048), 1u);
  EXPECT_EQ(estimate_table_frames(2049), 2u);
}

TEST(TableEstimate, CoversActualTable) {
  Frame f{std::vector<std::uint8_t>(kDefaultFrameBytes)};
  std::vector<Frame> frames;
  std::uint64_t n = 0;
  for (std::int64_t k = 0; k < 100000; ++k) {
    if (!f.append(k, {})) {
      frames.push_back(std::move(f));
      f = Frame(std::vector<std::uint8_t>(kDefaultFrameBytes));
      ASSERT_TRUE(f.append(k, {}));
    }
    ++n;
  }
  frames.push_back(std::move(f));
  std::vector<const Frame*> ptrs;
  for (const Frame& fr : frames) ptrs.push_back(&fr);
  HashTable t;
  t.build(ptrs);
  EXPECT_EQ(t.entry_count(), n);
  EXPECT_GE(estimate_table_frames(n) * kDefaultFrameBytes, t.memory_bytes());
  std::size_t hits = 0;
  t.probe(4242, [&](const RecordView& r) { hits += r.key == 4242 ? 1 : 0; });
  EXPECT_EQ(hits, 1u);
  t.probe(-1, [&](const RecordView&) { ++hits; });
  EXPECT_EQ(hits, 1u);
}

TEST(Split, Deterministic) {
  for (std::int64_t k = -50; k < 50; ++k) EXPECT_EQ(split(k, 20, 3), split(k, 20, 3));
}

TEST(Split, UniformPerRoundAndRoundsDiffer) {
  // Chi-square with 19 degrees of freedom; 43.82 is the 0.001 critical value.
  constexpr double kCritical = 43.82;
  const int n = 100000;
  std::size_t moved = 0;
  for (std::uint32_t round = 1; round <= 4; ++round) {
    std::vector<int> counts(20, 0);
    for (int k = 1; k <= n; ++k) {
      const auto p = split(k, 20, round);
      ASSERT_LT(p, 20u);
      ++counts[p];
      moved += p != split(k, 20, round + 1) ? 1 : 0;
    }
    double chi = 0;
    for (int c : counts) chi += (c - n / 20.0) * (c - n / 20.0) / (n / 20.0);
    EXPECT_LT(chi, kCritical) << "round " << round;
  }
  // Independent rounds keep about 1/20 of keys in place.
  EXPECT_GT(moved, static_cast<std::size_t>(4 * n * 0.9));
}

TEST(Split, EqualKeysStayTogether) {
  for (std::uint32_t round = 1; round < 5; ++round) {
    const auto p = split(99, 16, round);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(split(99, 16, round), p);
  }
}

TEST(Stats, CsvHasHeaderAndOneRow) {
  const auto b = uniform(16, 4096, 1);
  JoinConfig cfg = small_config(8);
  CountingSink sink;
  const JoinStats st = run_join(b, b, cfg, sink);
  std::ostringstream os;
  write_stats_csv(os, cfg, st);
  const std::string s = os.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 2);
  EXPECT_EQ(s.rfind("memory_frames", 0), 0u);
}

}  // namespace
}  // namespace hhj
