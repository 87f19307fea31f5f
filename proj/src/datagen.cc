#include "hhj/datagen.h"

#include <cmath>
#include <sstream>

#include "hhj/errors.h"

namespace hhj {

void RecordSizeSpec::validate() const {
  if (small_min > small_max) throw SpecError("small_min exceeds small_max");
  if (large_min.has_value() != large_max.has_value()) throw SpecError("large bounds must be given together");
  if (!(large_fraction >= 0.0 && large_fraction <= 1.0)) throw SpecError("large_fraction must lie in [0, 1]");
  if (has_large()) {
    if (*large_min > *large_max) throw SpecError("large_min exceeds large_max");
    if (small_max >= *large_min) throw SpecError("small range must lie below the large range");
    if (large_fraction == 0.0) throw SpecError("large bounds given with large_fraction 0");
  } else if (large_fraction != 0.0) {
    throw SpecError("large_fraction > 0 requires large bounds");
  }
}

double RecordSizeSpec::mean_payload() const noexcept {
  const double small = (static_cast<double>(small_min) + small_max) / 2.0;
  if (!has_large()) return small;
  const double large = (static_cast<double>(*large_min) + *large_max) / 2.0;
  return (1.0 - large_fraction) * small + large_fraction * large;
}

RecordSizeSpec RecordSizeSpec::all_small() { return {}; }

RecordSizeSpec RecordSizeSpec::one_large(double large_fraction) {
  return {700, 1500, 18 * 1024, 20 * 1024, large_fraction};
}

RecordSizeSpec RecordSizeSpec::three_large(double large_fraction) {
  return {700, 1500, 8 * 1024, 10 * 1024, large_fraction};
}

void DatasetSpec::validate() const {
  size_spec.validate();
  if (cardinality.has_value() == target_bytes.has_value())
    throw SpecError("exactly one of cardinality / target_bytes must be set");
  if (key_dist.kind == KeyKind::NormalSkew && !(key_dist.stddev > 0.0))
    throw SpecError("normal key distribution needs a positive stddev");
}

std::uint32_t sample_size(const RecordSizeSpec& spec, SplitMix64& rng) {
  if (spec.has_large() && rng.bernoulli(spec.large_fraction))
    return static_cast<std::uint32_t>(rng.uniform(*spec.large_min, *spec.large_max));
  return static_cast<std::uint32_t>(rng.uniform(spec.small_min, spec.small_max));
}

KeySampler::KeySampler(const KeyDistribution& dist, std::uint64_t cardinality, SplitMix64 rng)
    : dist_(dist), cardinality_(cardinality), rng_(rng) {
  if (dist_.kind == KeyKind::UniqueUniform) {
    permutation_.resize(cardinality_);
    for (std::uint64_t i = 0; i < cardinality_; ++i) permutation_[i] = static_cast<std::int64_t>(i + 1);
    for (std::uint64_t i = cardinality_; i > 1; --i) {
      const std::uint64_t j = rng_.below(i);
      std::swap(permutation_[i - 1], permutation_[j]);
    }
  }
}

std::int64_t KeySampler::next() {
  if (dist_.kind == KeyKind::UniqueUniform) {
    if (drawn_ >= permutation_.size()) throw GenerationError("unique key space exhausted");
    return permutation_[drawn_++];
  }
  if (cardinality_ == 0) throw GenerationError("empty key range");
  ++drawn_;
  const auto hi = static_cast<double>(cardinality_);
  for (;;) {
    const double v = std::nearbyint(dist_.mean + dist_.stddev * rng_.normal());
    if (v >= 1.0 && v <= hi) return static_cast<std::int64_t>(v);
  }
}

DatagenStreams::DatagenStreams(std::uint64_t seed) {
  SplitMix64 root(seed);
  sizes = root.split();
  keys = root.split();
  payload_seed = root.next();
}

void fill_payload(std::uint64_t payload_seed, std::uint64_t index, std::span<std::uint8_t> out) noexcept {
  std::uint64_t state = mix64(payload_seed ^ mix64(index + 1));
  std::size_t i = 0;
  while (i < out.size()) {
    state += SplitMix64::kGamma;
    std::uint64_t word = mix64(state);
    for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
      out[i] = static_cast<std::uint8_t>(word);
      word >>= 8;
    }
  }
}

std::uint64_t resolve_cardinality(const DatasetSpec& spec) {
  spec.validate();
  if (spec.cardinality) return *spec.cardinality;
  const std::uint64_t target = *spec.target_bytes;
  if (target < kRecordHeaderBytes + spec.size_spec.small_min)
    throw SpecError("target_bytes too small for a single record");
  DatagenStreams streams(spec.seed);
  std::uint64_t total = 0;
  std::uint64_t n = 0;
  for (;;) {
    const std::uint64_t size = kRecordHeaderBytes + sample_size(spec.size_spec, streams.sizes);
    if (total + size > target) break;
    total += size;
    ++n;
  }
  if (n == 0) throw SpecError("target_bytes too small for a single record");
  return n;
}

namespace {

template <typename Emit>
GenReport generate_impl(const DatasetSpec& spec, Emit&& emit) {
  const std::uint64_t n = resolve_cardinality(spec);
  DatagenStreams streams(spec.seed);
  KeySampler keys(spec.key_dist, n, streams.keys);
  GenReport report;
  std::vector<std::uint8_t> record;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint32_t len = sample_size(spec.size_spec, streams.sizes);
    if (spec.size_spec.has_large() && len >= *spec.size_spec.large_min) ++report.large_count;
    record.resize(kRecordHeaderBytes + len);
    fill_payload(streams.payload_seed, i, std::span(record).subspan(kRecordHeaderBytes));
    const std::int64_t key = keys.next();
    detail::store_u64(record.data(), static_cast<std::uint64_t>(key));
    detail::store_u32(record.data() + 8, len);
    emit(record);
    report.bytes += record.size();
    ++report.records;
  }
  return report;
}

}  // namespace

GenReport generate(const DatasetSpec& spec, std::ostream& out) {
  GenReport report = generate_impl(spec, [&](const std::vector<std::uint8_t>& rec) {
    out.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
  });
  if (!out) throw std::runtime_error("failed writing dataset");
  return report;
}

Dataset generate_dataset(const DatasetSpec& spec) {
  Dataset ds;
  ds.report = generate_impl(spec, [&](const std::vector<std::uint8_t>& rec) {
    ds.bytes.insert(ds.bytes.end(), rec.begin(), rec.end());
  });
  return ds;
}

DatasetSpec dataset_for_frames(const RecordSizeSpec& sizes, const KeyDistribution& keys, std::uint64_t frames,
                               std::size_t frame_bytes, std::uint64_t seed) {
  DatasetSpec spec;
  spec.target_bytes = frames * frame_bytes;
  spec.size_spec = sizes;
  spec.key_dist = keys;
  spec.seed = seed;
  return spec;
}

std::string describe(const RecordSizeSpec& spec) {
  std::ostringstream os;
  os << spec.small_min << ':' << spec.small_max;
  if (spec.has_large()) os << '+' << *spec.large_min << ':' << *spec.large_max << '@' << spec.large_fraction;
  return os.str();
}

}  // namespace hhj
