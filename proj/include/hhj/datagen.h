#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hhj/record.h"
#include "hhj/rng.h"

namespace hhj {

// Payload length law for a dataset: a small range plus an optional large
// range chosen with probability large_fraction.
struct RecordSizeSpec {
  std::uint32_t small_min = 700;
  std::uint32_t small_max = 1500;
  std::optional<std::uint32_t> large_min;
  std::optional<std::uint32_t> large_max;
  double large_fraction = 0.0;

  void validate() const;
  bool has_large() const noexcept { return large_min.has_value(); }
  double mean_payload() const noexcept;

  static RecordSizeSpec all_small();
  // Large records of 18-20 KB: one fits in a 32 KB frame.
  static RecordSizeSpec one_large(double large_fraction);
  // Large records of 8-10 KB: three fit in a 32 KB frame.
  static RecordSizeSpec three_large(double large_fraction);
};

enum class KeyKind { UniqueUniform, NormalSkew };

struct KeyDistribution {
  KeyKind kind = KeyKind::UniqueUniform;
  double mean = 0.0;
  double stddev = 1.0;

  static KeyDistribution unique() { return {}; }
  static KeyDistribution normal(double mean, double stddev) { return {KeyKind::NormalSkew, mean, stddev}; }
};

struct DatasetSpec {
  std::optional<std::uint64_t> cardinality;
  std::optional<std::uint64_t> target_bytes;
  RecordSizeSpec size_spec;
  KeyDistribution key_dist;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GenReport {
  std::uint64_t records = 0;
  std::uint64_t bytes = 0;
  std::uint64_t large_count = 0;
};

// Draws one payload length.
std::uint32_t sample_size(const RecordSizeSpec& spec, SplitMix64& rng);

// Draws keys for one dataset with key range [1, cardinality].
class KeySampler {
 public:
  KeySampler(const KeyDistribution& dist, std::uint64_t cardinality, SplitMix64 rng);

  // Throws GenerationError when a unique-key sampler is asked for more than
  // `cardinality` keys.
  std::int64_t next();

 private:
  KeyDistribution dist_;
  std::uint64_t cardinality_;
  SplitMix64 rng_;
  std::vector<std::int64_t> permutation_;
  std::size_t drawn_ = 0;
};

// Resolves target_bytes to a record count. Sizes come from their own rng
// stream, so generate() reproduces the same sizes afterwards.
std::uint64_t resolve_cardinality(const DatasetSpec& spec);

GenReport generate(const DatasetSpec& spec, std::ostream& out);

// In-memory dataset in the binary file format.
struct Dataset {
  std::vector<std::uint8_t> bytes;
  GenReport report;
};

Dataset generate_dataset(const DatasetSpec& spec);

// Dataset whose size is a multiple of a frame budget, e.g. 4x a 128-frame
// memory. Used by the sweeps and the acceptance suite.
DatasetSpec dataset_for_frames(const RecordSizeSpec& sizes, const KeyDistribution& keys, std::uint64_t frames,
                               std::size_t frame_bytes, std::uint64_t seed);

// Per-stream seeds derived from the dataset seed.
struct DatagenStreams {
  SplitMix64 sizes;
  SplitMix64 keys;
  std::uint64_t payload_seed;

  explicit DatagenStreams(std::uint64_t seed);
};

// Deterministic filler bytes for record `index`.
void fill_payload(std::uint64_t payload_seed, std::uint64_t index, std::span<std::uint8_t> out) noexcept;

std::string describe(const RecordSizeSpec& spec);

}  // namespace hhj
