#include "hhj/bench.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <thread>
#include <tuple>

#include "hhj/errors.h"
#include "hhj/tuning.h"

namespace hhj {

namespace {

constexpr const char* kExperimentNames[] = {"partitions", "insertion-params", "insertion",
                                            "growth",     "victim",           "cost-model"};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

struct GridPoint {
  std::size_t memory;
  double multiple;
  std::string dataset;
  bool skew;
  std::optional<std::size_t> partitions;
  InsertionPolicy insertion;
  VictimKind victim;
  GrowthPolicy growth;
  std::size_t cache;
  std::uint64_t seed;
};

std::vector<GridPoint> expand(const SweepSpec& s) {
  std::vector<std::optional<std::size_t>> parts;
  for (auto p : s.partitions) parts.emplace_back(p);
  if (parts.empty()) parts.emplace_back(std::nullopt);
  std::vector<GridPoint> out;
  for (auto m : s.memory_frames)
    for (auto mult : s.input_multiples)
      for (const auto& d : s.datasets)
        for (bool sk : s.skew)
          for (const auto& p : parts)
            for (const auto& ins : s.insertion)
              for (auto v : s.victims)
                for (auto g : s.growth)
                  for (auto c : s.cache_frames)
                    for (auto seed : s.seeds) out.push_back({m, mult, d, sk, p, ins, v, g, c, seed});
  return out;
}

using DatasetKey = std::tuple<std::string, bool, std::uint64_t, std::uint64_t>;

std::uint64_t input_frames(const GridPoint& g) {
  return static_cast<std::uint64_t>(std::llround(g.multiple * static_cast<double>(g.memory)));
}

Dataset make_dataset(const GridPoint& g, std::size_t frame_bytes) {
  DatasetSpec spec = dataset_for_frames(parse_size_spec(g.dataset), KeyDistribution::unique(), input_frames(g),
                                        frame_bytes, g.seed);
  if (g.skew) spec.key_dist = skewed_keys(resolve_cardinality(spec));
  return generate_dataset(spec);
}

MetricRow echo(const SweepSpec& s, std::size_t index, const GridPoint& g) {
  MetricRow r;
  r.experiment = to_string(s.experiment);
  r.grid_index = index;
  r.seed = g.seed;
  r.memory_frames = g.memory;
  r.input_multiple = g.multiple;
  r.dataset = g.dataset;
  r.skew = g.skew;
  r.partitions = g.partitions.value_or(0);
  r.insertion = to_string(g.insertion);
  r.victim = to_string(g.victim);
  r.growth = to_string(g.growth);
  r.cache_frames = g.cache;
  return r;
}

void run_cost_point(const GridPoint& g, MetricRow& row) {
  const auto partitions = g.partitions.value_or(20);
  const double build = g.multiple * static_cast<double>(g.memory);
  const double memory = static_cast<double>(g.memory);
  CostModelInput in{build, memory, partitions, partitions - in_memory_partitions(build, memory, partitions)};
  const IoSplit io = g.growth == GrowthPolicy::NGNS ? ngns_io_split(in) : gs_io_split(in);
  row.partitions = partitions;
  row.build_seq_frames = row.seq_frames = io.sequential;
  row.build_rand_frames = row.rand_frames = io.random;
}

void run_join_point(const SweepSpec& s, const GridPoint& g, std::size_t index, const Dataset& data, MetricRow& row) {
  JoinConfig cfg;
  cfg.memory_frames = g.memory;
  cfg.frame_bytes = s.frame_bytes;
  cfg.fixed_partitions = g.partitions;
  cfg.insertion = g.insertion;
  cfg.victim = g.victim;
  cfg.growth = g.growth;
  cfg.cache = g.cache ? CacheModel::elevator(g.cache) : CacheModel::disabled();
  cfg.seed = g.seed;
  cfg.run_id = "sweep-" + std::to_string(index);
  CountingSink sink;
  const JoinStats st = run_join(data.bytes, data.bytes, cfg, sink);
  if (st.spilled_frames() != st.io.frames_written(Phase::Build) + st.io.frames_written(Phase::Probe))
    throw InternalError("stats and ledger disagree on spilled frames");

  row.partitions = st.first_round_partitions;
  row.build_frames = st.first_round_build_frames;
  row.spilled_frames = st.spilled_frames();
  row.spilled_build_frames = st.spilled_build_frames;
  const double ideal = ideal_spill(static_cast<double>(st.first_round_build_frames),
                                   static_cast<double>(st.first_round_build_frames), g.memory, kIdealSpillFudge);
  if (ideal > 0) row.spilled_data_ratio = static_cast<double>(st.spilled_frames()) / ideal;
  row.avg_frame_fullness = st.first_round_fullness;
  row.resident_frames = st.first_round_resident_frames;
  row.in_memory_fraction = static_cast<double>(st.first_round_resident_frames) / static_cast<double>(g.memory);
  row.frames_searched = st.frames_searched;
  row.inserts = st.inserts;
  row.seq_frames = static_cast<double>(st.io.seq_frames());
  row.rand_frames = static_cast<double>(st.io.rand_frames());
  row.build_seq_frames = static_cast<double>(st.io.seq_frames(Phase::Build));
  row.build_rand_frames = static_cast<double>(st.io.rand_frames(Phase::Build));
  row.rounds = st.rounds;
  row.output_records = st.output_records;
}

}  // namespace

Experiment parse_experiment(const std::string& text) {
  for (std::size_t i = 0; i < std::size(kExperimentNames); ++i)
    if (text == kExperimentNames[i]) return static_cast<Experiment>(i);
  throw SpecError("unknown experiment: " + text);
}

const char* to_string(Experiment e) noexcept { return kExperimentNames[static_cast<std::size_t>(e)]; }

RecordSizeSpec parse_size_spec(const std::string& text) {
  if (text == "all-small") return RecordSizeSpec::all_small();
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  if ((kind == "1-large" || kind == "3-large") && colon != std::string::npos) {
    std::string pct = text.substr(colon + 1);
    if (!pct.empty() && pct.back() == '%') pct.pop_back();
    double p = 0;
    try {
      std::size_t used = 0;
      p = std::stod(pct, &used);
      if (used != pct.size()) throw SpecError("bad percentage");
    } catch (const std::exception&) {
      throw SpecError("bad large-record percentage in: " + text);
    }
    if (p < 0 || p > 100) throw SpecError("large-record percentage out of range: " + text);
    return kind == "1-large" ? RecordSizeSpec::one_large(p / 100) : RecordSizeSpec::three_large(p / 100);
  }
  throw SpecError("unknown dataset: " + text);
}

KeyDistribution skewed_keys(std::uint64_t cardinality) {
  const double n = static_cast<double>(cardinality);
  return KeyDistribution::normal(n / 2, n * 8208.0 / 985000.0);
}

void SweepSpec::validate() const {
  if (memory_frames.empty() || input_multiples.empty() || datasets.empty() || skew.empty() || insertion.empty() ||
      victims.empty() || growth.empty() || cache_frames.empty() || seeds.empty())
    throw SpecError("sweep grid has an empty dimension");
  for (auto m : memory_frames)
    if (m < 3) throw SpecError("memory must be at least 3 frames");
  for (auto x : input_multiples)
    if (!(x > 0)) throw SpecError("input multiple must be positive");
  for (const auto& d : datasets) parse_size_spec(d);
  for (auto p : partitions)
    if (p < 2) throw SpecError("partition count must be >= 2");
  if (threads == 0) throw SpecError("threads must be >= 1");
}

std::size_t SweepSpec::grid_size() const {
  return memory_frames.size() * input_multiples.size() * datasets.size() * skew.size() *
         std::max<std::size_t>(1, partitions.size()) * insertion.size() * victims.size() * growth.size() *
         cache_frames.size() * seeds.size();
}

SweepSpec SweepSpec::defaults(Experiment e) {
  SweepSpec s;
  s.experiment = e;
  switch (e) {
    case Experiment::Partitions:
      s.input_multiples = {0.5, 1, 2, 4, 8, 16, 32, 64};
      s.partitions = {2, 5, 10, 15, 20, 30, 40, 50, 64, 80, 100, 127};
      break;
    case Experiment::InsertionParams:
      s.memory_frames = {1024};
      s.input_multiples = {0.5};
      s.datasets = {"1-large:10", "1-large:50", "1-large:90"};
      s.insertion = {};
      for (unsigned n : {1, 2, 4, 8, 16, 32}) s.insertion.push_back(InsertionPolicy::append(n));
      for (unsigned p : {1, 5, 10, 25, 50, 100}) {
        s.insertion.push_back(InsertionPolicy::first_fit_pct(p));
        s.insertion.push_back(InsertionPolicy::random_pct(p));
      }
      break;
    case Experiment::Insertion:
      s.memory_frames = {1024};
      s.input_multiples = {0.5};
      s.datasets = {"all-small", "3-large:10", "3-large:50", "3-large:90", "1-large:10", "1-large:50", "1-large:90"};
      s.insertion = all_insertion_policies();
      break;
    case Experiment::Growth:
      s.input_multiples = {1.2, 2, 4, 10, 16};
      s.growth = {GrowthPolicy::NGNS, GrowthPolicy::GS};
      s.cache_frames = {0, 128};
      break;
    case Experiment::Victim:
      s.input_multiples = {4, 8, 16};
      s.datasets = {"all-small", "1-large:10"};
      s.skew = {false, true};
      s.victims = all_victim_kinds();
      break;
    case Experiment::CostModel:
      s.memory_frames = {128, 1024};
      s.input_multiples = {1.2, 2, 10, 20, 100};
      s.partitions = {20};
      s.growth = {GrowthPolicy::NGNS, GrowthPolicy::GS};
      break;
  }
  return s;
}

std::vector<MetricRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const auto grid = expand(spec);
  std::vector<MetricRow> rows(grid.size());

  std::map<DatasetKey, std::shared_ptr<const Dataset>> datasets;
  std::vector<std::shared_ptr<const Dataset>> data_of(grid.size());
  std::vector<std::string> data_error(grid.size());
  if (spec.experiment != Experiment::CostModel) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto& g = grid[i];
      const DatasetKey key{g.dataset, g.skew, input_frames(g), g.seed};
      auto it = datasets.find(key);
      if (it == datasets.end()) {
        std::shared_ptr<const Dataset> d;
        try {
          d = std::make_shared<const Dataset>(make_dataset(g, spec.frame_bytes));
        } catch (const std::exception& e) {
          data_error[i] = e.what();
        }
        it = datasets.emplace(key, d).first;
      }
      data_of[i] = it->second;
      if (!data_of[i] && data_error[i].empty()) data_error[i] = "dataset generation failed";
    }
  }

  auto run_point = [&](std::size_t i) {
    MetricRow& row = rows[i];
    row = echo(spec, i, grid[i]);
    try {
      if (spec.experiment == Experiment::CostModel) {
        run_cost_point(grid[i], row);
      } else if (!data_of[i]) {
        row.error = data_error[i];
      } else {
        run_join_point(spec, grid[i], i, *data_of[i], row);
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };

  const unsigned threads = std::min<std::size_t>(spec.threads, std::max<std::size_t>(1, grid.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) run_point(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) run_point(i);
      });
    for (auto& th : pool) th.join();
  }
  return rows;
}

void write_csv(std::ostream& out, std::span<const MetricRow> rows) {
  out << kCsvVersionLine << '\n';
  out << "experiment,grid_index,seed,memory_frames,input_multiple,dataset,skew,partitions,insertion,victim,growth,"
         "cache_frames,build_frames,spilled_frames,spilled_build_frames,spilled_data_ratio,avg_frame_fullness,"
         "resident_frames,in_memory_fraction,frames_searched,inserts,seq_frames,rand_frames,build_seq_frames,build_rand_frames,"
         "rounds,output_records,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << r.experiment << ',' << r.grid_index << ',' << r.seed << ',' << r.memory_frames << ','
        << fmt(r.input_multiple) << ',' << r.dataset << ',' << (r.skew ? 1 : 0) << ',' << r.partitions << ','
        << r.insertion << ',' << r.victim << ',' << r.growth << ',' << r.cache_frames << ',' << r.build_frames << ','
        << r.spilled_frames << ',' << r.spilled_build_frames << ',' << fmt(r.spilled_data_ratio) << ','
        << fmt(r.avg_frame_fullness) << ',' << r.resident_frames << ',' << fmt(r.in_memory_fraction) << ',' << r.frames_searched << ','
        << r.inserts << ',' << fmt(r.seq_frames) << ',' << fmt(r.rand_frames) << ',' << fmt(r.build_seq_frames)
        << ',' << fmt(r.build_rand_frames) << ',' << r.rounds << ',' << r.output_records << ',' << err << '\n';
  }
}

std::string to_csv(std::span<const MetricRow> rows) {
  std::ostringstream os;
  write_csv(os, rows);
  return os.str();
}

std::vector<MetricRow> run_sweep_to_file(const SweepSpec& spec, const std::filesystem::path& path) {
  spec.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  auto rows = run_sweep(spec);
  write_csv(out, rows);
  if (!out) throw ConfigError("write failed: " + path.string());
  return rows;
}

std::vector<MetricSummary> compare_policies(std::span<const MetricRow> rows) {
  if (rows.empty()) return {};
  for (const auto& r : rows)
    if (r.experiment != rows.front().experiment) throw SpecError("rows mix experiments");

  struct Metric {
    const char* name;
    double (*get)(const MetricRow&);
  };
  static const Metric metrics[] = {
      {"spilled_frames", [](const MetricRow& r) { return static_cast<double>(r.spilled_frames); }},
      {"frames_searched", [](const MetricRow& r) { return static_cast<double>(r.frames_searched); }},
      {"avg_frame_fullness", [](const MetricRow& r) { return r.avg_frame_fullness.value_or(0); }},
      {"seq_frames", [](const MetricRow& r) { return r.seq_frames; }},
      {"rand_frames", [](const MetricRow& r) { return r.rand_frames; }},
  };

  std::map<std::string, std::vector<const MetricRow*>> groups;
  for (const auto& r : rows) {
    if (!r.error.empty()) continue;
    std::ostringstream key;
    key << "memory=" << r.memory_frames << " input=" << fmt(r.input_multiple) << " dataset=" << r.dataset
        << " skew=" << r.skew << " cache=" << r.cache_frames << " seed=" << r.seed;
    groups[key.str()].push_back(&r);
  }
  std::vector<MetricSummary> out;
  for (const auto& [group, members] : groups) {
    for (const auto& m : metrics) {
      MetricSummary s{group, m.name, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
      for (const auto* r : members) {
        s.min = std::min(s.min, m.get(*r));
        s.max = std::max(s.max, m.get(*r));
      }
      if (s.min > 0)
        s.ratio = s.max / s.min;
      else
        s.ratio = s.max > 0 ? std::numeric_limits<double>::infinity() : 1.0;
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace hhj
