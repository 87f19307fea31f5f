#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hhj/bench.h"
#include "hhj/datagen.h"
#include "hhj/engine.h"
#include "hhj/errors.h"
#include "hhj/tuning.h"

namespace py = pybind11;
using namespace hhj;

namespace {

std::span<const std::uint8_t> as_span(const py::bytes& b) {
  const std::string_view v = b;
  return {reinterpret_cast<const std::uint8_t*>(v.data()), v.size()};
}

py::bytes as_bytes(std::span<const std::uint8_t> v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

py::dict stats_dict(const JoinStats& st) {
  py::dict d;
  d["rounds"] = st.rounds;
  d["output_records"] = st.output_records;
  d["spilled_build_frames"] = st.spilled_build_frames;
  d["spilled_probe_frames"] = st.spilled_probe_frames;
  d["spilled_partitions"] = st.spilled_partitions;
  d["seq_frames"] = st.io.seq_frames();
  d["rand_frames"] = st.io.rand_frames();
  d["frames_read"] = st.io.total_frames_read();
  d["frames_searched"] = st.frames_searched;
  d["inserts"] = st.inserts;
  d["bailouts"] = st.bailouts;
  d["role_reversals"] = st.role_reversals;
  d["reloads"] = st.reloads;
  d["in_memory_shortcuts"] = st.in_memory_shortcuts;
  d["peak_frames"] = st.peak_frames;
  d["first_round_partitions"] = st.first_round_partitions;
  d["first_round_build_frames"] = st.first_round_build_frames;
  d["first_round_resident_frames"] = st.first_round_resident_frames;
  d["first_round_fullness"] = st.first_round_fullness;
  return d;
}

class PairSink final : public JoinSink {
 public:
  void emit(const RecordView& b, const RecordView& p) override {
    pairs.emplace_back(b.key, std::string(b.payload.begin(), b.payload.end()),
                       std::string(p.payload.begin(), p.payload.end()));
  }
  std::vector<std::tuple<std::int64_t, std::string, std::string>> pairs;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dynamic hybrid hash join engine, data generator and cost model";

  py::register_exception<SpecError>(m, "SpecError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<GenerationError>(m, "GenerationError", PyExc_RuntimeError);
  py::register_exception<UnsupportedRecord>(m, "UnsupportedRecord", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<InternalError>(m, "InternalError", PyExc_RuntimeError);

  m.def(
      "generate",
      [](std::optional<std::uint64_t> cardinality, std::optional<std::uint64_t> target_bytes,
         const std::string& dataset, std::optional<std::pair<double, double>> normal_keys, std::uint64_t seed) {
        DatasetSpec spec;
        spec.cardinality = cardinality;
        spec.target_bytes = target_bytes;
        spec.size_spec = parse_size_spec(dataset);
        if (normal_keys) spec.key_dist = KeyDistribution::normal(normal_keys->first, normal_keys->second);
        spec.seed = seed;
        Dataset ds;
        {
          py::gil_scoped_release release;
          ds = generate_dataset(spec);
        }
        py::dict report;
        report["records"] = ds.report.records;
        report["bytes"] = ds.report.bytes;
        report["large_count"] = ds.report.large_count;
        return py::make_tuple(as_bytes(ds.bytes), report);
      },
      py::kw_only(), py::arg("cardinality") = py::none(), py::arg("target_bytes") = py::none(),
      py::arg("dataset") = "all-small", py::arg("normal_keys") = py::none(), py::arg("seed") = 0,
      "Generate a dataset; returns (bytes, report). normal_keys=(mean, stddev) selects skewed keys.");

  m.def(
      "parse_records",
      [](const py::bytes& data) {
        std::vector<std::pair<std::int64_t, py::bytes>> out;
        for (const Record& r : parse_records(as_span(data))) out.emplace_back(r.key, as_bytes(r.payload));
        return out;
      },
      "Decode a binary dataset into (key, payload) pairs.");

  m.def(
      "encode_records",
      [](const std::vector<std::pair<std::int64_t, py::bytes>>& rows) {
        std::vector<std::uint8_t> out;
        for (const auto& [k, p] : rows) append_record(out, k, as_span(p));
        return as_bytes(out);
      },
      "Encode (key, payload) pairs in the binary dataset format.");

  m.def(
      "run_join",
      [](const py::bytes& build, const py::bytes& probe, std::size_t memory_frames, std::size_t frame_bytes,
         std::optional<std::size_t> partitions, const std::string& insertion, const std::string& victim,
         const std::string& growth, std::size_t cache_frames, std::uint64_t seed, bool bailout, bool role_reversal,
         bool in_memory_shortcut, bool best_match, bool reload_spilled, bool collect) {
        JoinConfig cfg;
        cfg.memory_frames = memory_frames;
        cfg.frame_bytes = frame_bytes;
        cfg.fixed_partitions = partitions;
        cfg.insertion = parse_insertion_policy(insertion);
        cfg.victim = parse_victim_kind(victim);
        cfg.growth = parse_growth_policy(growth);
        cfg.cache = cache_frames ? CacheModel::elevator(cache_frames) : CacheModel::disabled();
        cfg.seed = seed;
        cfg.bailout = bailout;
        cfg.role_reversal = role_reversal;
        cfg.in_memory_shortcut = in_memory_shortcut;
        cfg.best_match = best_match;
        cfg.reload_spilled = reload_spilled;
        const std::string_view b = build, p = probe;
        PairSink pairs;
        CountingSink counter;
        JoinStats st;
        {
          py::gil_scoped_release release;
          JoinSink& sink = collect ? static_cast<JoinSink&>(pairs) : counter;
          st = run_join({reinterpret_cast<const std::uint8_t*>(b.data()), b.size()},
                        {reinterpret_cast<const std::uint8_t*>(p.data()), p.size()}, cfg, sink);
        }
        py::dict d = stats_dict(st);
        if (collect) {
          py::list out;
          for (auto& [k, bp, pp] : pairs.pairs) out.append(py::make_tuple(k, py::bytes(bp), py::bytes(pp)));
          d["pairs"] = out;
        }
        return d;
      },
      py::arg("build"), py::arg("probe"), py::kw_only(), py::arg("memory_frames") = 128,
      py::arg("frame_bytes") = kDefaultFrameBytes, py::arg("partitions") = py::none(),
      py::arg("insertion") = "append:8", py::arg("victim") = "largest-size", py::arg("growth") = "ngns",
      py::arg("cache_frames") = 0, py::arg("seed") = 0, py::arg("bailout") = true, py::arg("role_reversal") = true,
      py::arg("in_memory_shortcut") = true, py::arg("best_match") = false, py::arg("reload_spilled") = false,
      py::arg("collect") = false,
      "Join two binary datasets. Returns a stats dict; with collect=True it also holds "
      "'pairs' as (key, build_payload, probe_payload) tuples.");

  m.def(
      "partition_count",
      [](std::uint64_t build_frames, std::uint64_t memory_frames, double fudge, std::uint64_t floor_partitions,
         bool known_size) {
        return partition_count({build_frames, memory_frames, fudge, floor_partitions, known_size});
      },
      py::arg("build_frames"), py::arg("memory_frames"), py::arg("fudge") = 1.3, py::arg("floor_partitions") = 20,
      py::arg("known_size") = true);

  m.def("in_memory_partitions", &in_memory_partitions, py::arg("build"), py::arg("memory"), py::arg("partitions"));

  auto split_fn = [](IoSplit (*fn)(const CostModelInput&)) {
    return [fn](double r, double mem, std::uint64_t p, std::uint64_t x) {
      const IoSplit s = fn({r, mem, p, x});
      return std::make_pair(s.sequential, s.random);
    };
  };
  m.def("ngns_io_split", split_fn(&ngns_io_split), py::arg("build"), py::arg("memory"), py::arg("partitions"),
        py::arg("spilled"), "(sequential, random) build-phase frames under no-grow/no-steal.");
  m.def("gs_io_split", split_fn(&gs_io_split), py::arg("build"), py::arg("memory"), py::arg("partitions"),
        py::arg("spilled"), "(sequential, random) build-phase frames under grow/steal.");

  m.def("ideal_spill", &ideal_spill, py::arg("build_frames"), py::arg("probe_frames"), py::arg("memory_frames"),
        py::arg("fudge") = kIdealSpillFudge);

  m.def(
      "run_sweep",
      [](const std::string& experiment, std::optional<std::vector<std::size_t>> memory,
         std::optional<std::vector<double>> inputs, std::optional<std::vector<std::string>> datasets,
         std::optional<std::vector<std::size_t>> partitions, std::optional<std::vector<std::string>> victims,
         std::optional<std::vector<std::string>> insertion, std::optional<std::vector<std::string>> growth,
         std::optional<std::vector<std::size_t>> cache, std::optional<std::vector<std::uint64_t>> seeds,
         std::optional<std::vector<bool>> skew, std::size_t frame_bytes, unsigned threads) {
        SweepSpec s = SweepSpec::defaults(parse_experiment(experiment));
        if (memory) s.memory_frames = *memory;
        if (inputs) s.input_multiples = *inputs;
        if (datasets) s.datasets = *datasets;
        if (partitions) s.partitions = *partitions;
        if (cache) s.cache_frames = *cache;
        if (seeds) s.seeds = *seeds;
        if (skew) s.skew = *skew;
        if (victims) {
          s.victims.clear();
          for (const auto& v : *victims) s.victims.push_back(parse_victim_kind(v));
        }
        if (insertion) {
          s.insertion.clear();
          for (const auto& v : *insertion) s.insertion.push_back(parse_insertion_policy(v));
        }
        if (growth) {
          s.growth.clear();
          for (const auto& v : *growth) s.growth.push_back(parse_growth_policy(v));
        }
        s.frame_bytes = frame_bytes;
        s.threads = threads;
        py::gil_scoped_release release;
        return to_csv(run_sweep(s));
      },
      py::arg("experiment"), py::kw_only(), py::arg("memory") = py::none(), py::arg("inputs") = py::none(),
      py::arg("datasets") = py::none(), py::arg("partitions") = py::none(), py::arg("victims") = py::none(),
      py::arg("insertion") = py::none(), py::arg("growth") = py::none(), py::arg("cache") = py::none(),
      py::arg("seeds") = py::none(), py::arg("skew") = py::none(), py::arg("frame_bytes") = kDefaultFrameBytes,
      py::arg("threads") = 1, "Run an experiment grid and return the CSV text.");

  m.attr("DEFAULT_FRAME_BYTES") = kDefaultFrameBytes;
}
