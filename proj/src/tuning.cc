#include "hhj/tuning.h"

#include <algorithm>
#include <cmath>

#include "hhj/errors.h"

namespace hhj {

namespace {

// Guards floor/ceil against representation error (98 / 1.4 is 70, not 69.99..).
constexpr double kEps = 1e-9;

double floor_eps(double v) { return std::floor(v + kEps); }
double ceil_eps(double v) { return std::ceil(v - kEps); }

void check_cost_input(const CostModelInput& in) {
  if (in.partitions < 2) throw ConfigError("cost model needs at least 2 partitions");
  if (in.spilled > in.partitions) throw ConfigError("spilled partitions exceed partition count");
  if (in.memory < static_cast<double>(in.partitions)) throw ConfigError("memory must hold one frame per partition");
}

}  // namespace

std::uint64_t partition_count(const PartitionCountInput& in) {
  if (in.memory_frames < 3) throw ConfigError("partition_count needs at least 3 memory frames");
  if (!(in.fudge >= 1.0)) throw ConfigError("fudge factor must be >= 1");
  const std::uint64_t floor_p = std::min(in.floor_partitions, in.memory_frames);
  if (!in.known_size) return std::max<std::uint64_t>(2, floor_p);

  const double r = static_cast<double>(in.build_frames);
  const double m = static_cast<double>(in.memory_frames);
  const double raw = ceil_eps((r * in.fudge - m) / (m - 1.0));
  const std::uint64_t lo = std::max<std::uint64_t>(2, floor_p);
  if (raw <= static_cast<double>(lo)) return lo;
  if (raw >= m) return in.memory_frames;
  return static_cast<std::uint64_t>(raw);
}

std::uint64_t in_memory_partitions(double build, double memory, std::uint64_t partitions) {
  if (!(build > 0)) throw ConfigError("in_memory_partitions needs a positive build size");
  const double per_partition = build / static_cast<double>(partitions);
  const double fit = floor_eps(memory / per_partition);
  if (fit <= 0) return 0;
  return std::min<std::uint64_t>(partitions, static_cast<std::uint64_t>(fit));
}

double first_spill_frames(const CostModelInput& in, std::uint64_t i) {
  return (in.memory - static_cast<double>(i) + 1.0) / (static_cast<double>(in.partitions) - static_cast<double>(i) + 1.0);
}

IoSplit ngns_io_split(const CostModelInput& in) {
  check_cost_input(in);
  IoSplit out;
  const double per_partition = in.build / static_cast<double>(in.partitions);
  for (std::uint64_t i = 1; i <= in.spilled; ++i) {
    const double first = first_spill_frames(in, i);
    out.sequential += first;
    out.random += std::max(0.0, per_partition - first);
  }
  return out;
}

double geometric_factor(std::uint64_t partitions) {
  if (partitions <= 1) throw ConfigError("geometric factor needs P >= 2");
  return 1.0 / (1.0 - 1.0 / static_cast<double>(partitions));
}

double gs_chunk_series(double chunk, std::uint64_t partitions, unsigned terms) {
  const double ratio = 1.0 / static_cast<double>(partitions);
  double sum = 0.0;
  double weight = 1.0;
  for (unsigned k = 0; k <= terms; ++k) {
    sum += weight * chunk;
    weight *= ratio;
  }
  return sum;
}

IoSplit gs_io_split(const CostModelInput& in) {
  check_cost_input(in);
  const double factor = geometric_factor(in.partitions);
  IoSplit out;
  for (std::uint64_t i = 1; i <= in.spilled; ++i) {
    const double first = first_spill_frames(in, i);
    out.sequential += factor * first + first;
  }
  return out;
}

namespace {

double ideal_round(double build, double probe, std::uint64_t memory, double fudge, unsigned depth) {
  if (build <= 0) return 0;
  if (build * fudge <= static_cast<double>(memory) + kEps) return 0;
  PartitionCountInput pc;
  pc.build_frames = static_cast<std::uint64_t>(ceil_eps(build));
  pc.memory_frames = memory;
  pc.fudge = fudge;
  pc.floor_partitions = 2;
  pc.known_size = true;
  const std::uint64_t partitions = partition_count(pc);
  const double resident = std::max(0.0, floor_eps((static_cast<double>(memory) - static_cast<double>(partitions)) / fudge));
  const double build_spill = std::max(0.0, build - resident);
  if (build_spill <= 0) return 0;
  const double probe_spill = probe * (build_spill / build);
  double total = build_spill + probe_spill;
  // A spilled remainder that does not shrink can never fit; stop recursing.
  if (depth < 64 && build_spill < build) {
    const auto p = static_cast<double>(partitions);
    total += p * ideal_round(build_spill / p, probe_spill / p, memory, fudge, depth + 1);
  }
  return total;
}

}  // namespace

double ideal_spill(double build_frames, double probe_frames, std::uint64_t memory_frames, double fudge) {
  if (memory_frames < 3) throw ConfigError("ideal_spill needs at least 3 memory frames");
  if (!(fudge >= 1.0)) throw ConfigError("fudge factor must be >= 1");
  return ideal_round(build_frames, probe_frames, memory_frames, fudge, 0);
}

}  // namespace hhj
