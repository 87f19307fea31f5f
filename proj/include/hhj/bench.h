#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hhj/datagen.h"
#include "hhj/engine.h"

namespace hhj {

enum class Experiment { Partitions, InsertionParams, Insertion, Growth, Victim, CostModel };

Experiment parse_experiment(const std::string& text);
const char* to_string(Experiment e) noexcept;

// Named record-size laws: "all-small", "1-large:10" (percent large),
// "3-large:50".
RecordSizeSpec parse_size_spec(const std::string& text);

// Normal key skew used by the skewed sweeps, scaled to the cardinality.
KeyDistribution skewed_keys(std::uint64_t cardinality);

struct SweepSpec {
  Experiment experiment = Experiment::Partitions;
  std::vector<std::size_t> memory_frames{128};
  // Build (= probe) size as a multiple of memory.
  std::vector<double> input_multiples{8.0};
  std::vector<std::string> datasets{"all-small"};
  std::vector<bool> skew{false};
  // Fixed partition counts; empty means the engine's own choice.
  std::vector<std::size_t> partitions;
  std::vector<InsertionPolicy> insertion{InsertionPolicy::append(8)};
  std::vector<VictimKind> victims{VictimKind::LargestSize};
  std::vector<GrowthPolicy> growth{GrowthPolicy::NGNS};
  std::vector<std::size_t> cache_frames{0};
  std::vector<std::uint64_t> seeds{1};
  std::size_t frame_bytes = kDefaultFrameBytes;
  unsigned threads = 1;

  // Throws SpecError on an empty grid dimension.
  void validate() const;
  std::size_t grid_size() const;

  // Grid used by the `sweep` verb when none is given.
  static SweepSpec defaults(Experiment e);
};

struct MetricRow {
  std::string experiment;
  std::size_t grid_index = 0;
  std::uint64_t seed = 0;
  std::size_t memory_frames = 0;
  double input_multiple = 0;
  std::string dataset;
  bool skew = false;
  std::size_t partitions = 0;
  std::string insertion;
  std::string victim;
  std::string growth;
  std::size_t cache_frames = 0;

  std::uint64_t build_frames = 0;
  std::uint64_t spilled_frames = 0;
  std::uint64_t spilled_build_frames = 0;
  std::optional<double> spilled_data_ratio;
  std::optional<double> avg_frame_fullness;
  std::uint64_t resident_frames = 0;
  double in_memory_fraction = 0;
  std::uint64_t frames_searched = 0;
  std::uint64_t inserts = 0;
  double seq_frames = 0;
  double rand_frames = 0;
  double build_seq_frames = 0;
  double build_rand_frames = 0;
  std::uint32_t rounds = 0;
  std::uint64_t output_records = 0;
  std::string error;
};

std::vector<MetricRow> run_sweep(const SweepSpec& spec);

inline constexpr const char* kCsvVersionLine = "#hhj-lab-csv-v1";
void write_csv(std::ostream& out, std::span<const MetricRow> rows);
std::string to_csv(std::span<const MetricRow> rows);

// Runs the sweep and writes the CSV to `path`. The path is opened before any
// work; failure throws ConfigError and leaves no file behind.
std::vector<MetricRow> run_sweep_to_file(const SweepSpec& spec, const std::filesystem::path& path);

struct MetricSummary {
  std::string group;
  std::string metric;
  double min = 0;
  double max = 0;
  // max / min; 1 when both are zero, infinity when only min is.
  double ratio = 1;
};

// Groups rows by everything except the policy columns and reports the spread
// of each metric across policies. Throws SpecError on mixed experiments.
std::vector<MetricSummary> compare_policies(std::span<const MetricRow> rows);

}  // namespace hhj
