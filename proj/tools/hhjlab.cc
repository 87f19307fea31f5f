// hhjlab: dataset generation, single joins, sweeps, cost model and the
// acceptance suite from the command line.

#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hhj/acceptance.h"
#include "hhj/bench.h"
#include "hhj/datagen.h"
#include "hhj/engine.h"
#include "hhj/errors.h"
#include "hhj/tuning.h"

namespace {

using namespace hhj;

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct GenArgs {
  std::string out;
  std::optional<std::uint64_t> records;
  std::optional<std::uint64_t> bytes;
  std::optional<std::uint64_t> frames;
  std::string dataset = "all-small";
  std::string small, large, keys;
  std::optional<double> large_frac;
  bool skew = false;
  std::uint64_t seed = 1;
  std::size_t frame_bytes = kDefaultFrameBytes;
};

// "MIN:MAX" byte range.
std::pair<std::uint32_t, std::uint32_t> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw SpecError("");
    return {static_cast<std::uint32_t>(std::stoul(text.substr(0, colon))),
            static_cast<std::uint32_t>(std::stoul(text.substr(colon + 1)))};
  } catch (const std::exception&) {
    throw SpecError("expected MIN:MAX, got " + text);
  }
}

// unique | normal:MEAN:STDDEV
KeyDistribution parse_keys(const std::string& text) {
  if (text == "unique") return KeyDistribution::unique();
  if (text.rfind("normal:", 0) == 0) {
    const auto rest = text.substr(7);
    const auto colon = rest.find(':');
    try {
      if (colon == std::string::npos) throw SpecError("");
      return KeyDistribution::normal(std::stod(rest.substr(0, colon)), std::stod(rest.substr(colon + 1)));
    } catch (const std::exception&) {
    }
  }
  throw SpecError("--keys must be unique or normal:MEAN:STDDEV, got " + text);
}

int run_gen(const GenArgs& a) {
  DatasetSpec spec;
  spec.size_spec = parse_size_spec(a.dataset);
  if (!a.small.empty()) std::tie(spec.size_spec.small_min, spec.size_spec.small_max) = parse_range(a.small);
  if (!a.large.empty()) {
    const auto [lo, hi] = parse_range(a.large);
    spec.size_spec.large_min = lo;
    spec.size_spec.large_max = hi;
  }
  if (a.large_frac) spec.size_spec.large_fraction = *a.large_frac;
  spec.seed = a.seed;
  const int given = a.records.has_value() + a.bytes.has_value() + a.frames.has_value();
  if (given != 1) throw SpecError("give exactly one of --records, --bytes, --frames");
  spec.cardinality = a.records;
  spec.target_bytes = a.bytes;
  if (a.frames) spec.target_bytes = *a.frames * a.frame_bytes;
  if (!a.keys.empty() && a.skew) throw SpecError("--keys and --skew are exclusive");
  if (!a.keys.empty()) spec.key_dist = parse_keys(a.keys);
  if (a.skew) spec.key_dist = skewed_keys(resolve_cardinality(spec));
  std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + a.out);
  const GenReport r = generate(spec, out);
  std::cout << "records,bytes,large_records\n" << r.records << ',' << r.bytes << ',' << r.large_count << '\n';
  return 0;
}

struct JoinArgs {
  std::string build, probe;
  JoinConfig cfg;
  std::optional<std::size_t> partitions;
  std::string insertion = "append:8";
  std::string victim = "largest-size";
  std::string growth = "ngns";
  std::size_t cache = 0;
  bool no_bailout = false, no_role_reversal = false, no_shortcut = false;
  std::string spill = "memory";
  std::string spill_dir;
  std::string sink = "null";
  std::string stats;
  std::string ledger;
};

int run_join_verb(JoinArgs& a) {
  JoinConfig cfg = a.cfg;
  cfg.fixed_partitions = a.partitions;
  cfg.insertion = parse_insertion_policy(a.insertion);
  cfg.victim = parse_victim_kind(a.victim);
  cfg.growth = parse_growth_policy(a.growth);
  cfg.cache = a.cache ? CacheModel::elevator(a.cache) : CacheModel::disabled();
  cfg.bailout = !a.no_bailout;
  cfg.role_reversal = !a.no_role_reversal;
  cfg.in_memory_shortcut = !a.no_shortcut;
  if (a.spill == "disk")
    cfg.spill_backend = SpillBackend::Disk;
  else if (a.spill != "memory")
    throw ConfigError("--spill must be memory or disk");
  cfg.spill_dir = a.spill_dir.empty() ? default_spill_dir() : std::filesystem::path(a.spill_dir);
  cfg.run_id = "hhjlab-" + std::to_string(::getpid());

  const auto build = read_file(a.build);
  const auto probe = read_file(a.probe);
  std::ofstream out_file;
  CountingSink counting;
  std::unique_ptr<BinaryFileSink> file_sink;
  JoinSink* sink = &counting;
  if (a.sink != "null") {
    out_file.open(a.sink, std::ios::binary | std::ios::trunc);
    if (!out_file) throw ConfigError("cannot write " + a.sink);
    file_sink = std::make_unique<BinaryFileSink>(out_file);
    sink = file_sink.get();
  }
  const JoinStats st = run_join(build, probe, cfg, *sink);
  if (a.stats.empty()) {
    write_stats_csv(std::cout, cfg, st);
  } else {
    std::ofstream s(a.stats);
    if (!s) throw ConfigError("cannot write " + a.stats);
    write_stats_csv(s, cfg, st);
  }
  if (!a.ledger.empty()) {
    std::ofstream l(a.ledger);
    if (!l) throw ConfigError("cannot write " + a.ledger);
    st.io.write_csv(l);
  }
  return 0;
}

struct SweepArgs {
  std::string experiment = "partitions";
  std::string out;
  std::vector<std::size_t> memory, partitions, cache;
  std::vector<double> inputs;
  std::vector<std::string> datasets, insertion, victims, growth;
  std::vector<std::uint64_t> seeds;
  bool skew = false;
  unsigned threads = 1;
  std::size_t frame_bytes = kDefaultFrameBytes;
  bool summary = false;
};

int run_sweep_verb(const SweepArgs& a) {
  SweepSpec s = SweepSpec::defaults(parse_experiment(a.experiment));
  if (!a.memory.empty()) s.memory_frames = a.memory;
  if (!a.inputs.empty()) s.input_multiples = a.inputs;
  if (!a.datasets.empty()) s.datasets = a.datasets;
  if (!a.partitions.empty()) s.partitions = a.partitions;
  if (!a.cache.empty()) s.cache_frames = a.cache;
  if (!a.seeds.empty()) s.seeds = a.seeds;
  if (a.skew) s.skew = {true};
  if (!a.insertion.empty()) {
    s.insertion.clear();
    for (const auto& p : a.insertion) s.insertion.push_back(parse_insertion_policy(p));
  }
  if (!a.victims.empty()) {
    s.victims.clear();
    for (const auto& v : a.victims) s.victims.push_back(parse_victim_kind(v));
  }
  if (!a.growth.empty()) {
    s.growth.clear();
    for (const auto& g : a.growth) s.growth.push_back(parse_growth_policy(g));
  }
  s.threads = a.threads;
  s.frame_bytes = a.frame_bytes;

  std::vector<MetricRow> rows;
  if (a.out.empty() || a.out == "-") {
    rows = run_sweep(s);
    write_csv(std::cout, rows);
  } else {
    rows = run_sweep_to_file(s, a.out);
  }
  if (a.summary) {
    std::ostream& os = a.out.empty() || a.out == "-" ? std::cerr : std::cout;
    os << "group,metric,min,max,ratio\n";
    for (const auto& m : compare_policies(rows))
      os << m.group << ',' << m.metric << ',' << m.min << ',' << m.max << ',' << m.ratio << '\n';
  }
  return 0;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") + 1 - b);
}

// Splices a flat key=value config file (after the verb's --config) into the
// argument list as --key=value tokens. Keys given on the command line win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::size_t> at;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) at = i + 1;
    else if (args[i].rfind("--config=", 0) == 0) at = i;
  }
  if (!at) return args;
  const std::string path = args[*at].rfind("--config=", 0) == 0 ? args[*at].substr(9) : args[*at];
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::vector<std::string> given;
  for (const auto& a : args)
    if (a.rfind("--", 0) == 0) given.push_back(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  std::vector<std::string> extra;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(n) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(given.begin(), given.end(), key) != given.end()) continue;
    extra.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(*at) + 1, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic hybrid hash join lab"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a dataset in the binary record format");
  g->add_option("--out", gen.out, "output file")->required();
  g->add_option("--records,--cardinality", gen.records, "record count");
  g->add_option("--bytes", gen.bytes, "target size in bytes");
  g->add_option("--frames", gen.frames, "target size in frames");
  g->add_option("--dataset", gen.dataset, "all-small | 1-large:PCT | 3-large:PCT");
  g->add_option("--small", gen.small, "small payload range MIN:MAX");
  g->add_option("--large", gen.large, "large payload range MIN:MAX");
  g->add_option("--large-frac", gen.large_frac, "probability of a large payload");
  g->add_option("--keys", gen.keys, "unique | normal:MEAN:STDDEV");
  g->add_flag("--skew", gen.skew, "normal keys scaled to the cardinality");
  g->add_option("--seed", gen.seed);
  g->add_option("--frame-bytes", gen.frame_bytes);

  JoinArgs join;
  auto* j = app.add_subcommand("join", "join two dataset files");
  j->add_option("--build", join.build, "build input")->required();
  j->add_option("--probe", join.probe, "probe input")->required();
  j->add_option("--memory", join.cfg.memory_frames, "memory in frames");
  j->add_option("--frame-bytes", join.cfg.frame_bytes);
  j->add_option("--fudge", join.cfg.fudge);
  j->add_option("--floor", join.cfg.floor_partitions, "minimum partition count");
  j->add_option("--partitions", join.partitions, "fixed partition count for every round");
  j->add_option("--insertion", join.insertion, "append:8 | firstfit | firstfit:10% | bestfit | nextfit | random:10%");
  j->add_option("--victim", join.victim, "victim policy");
  j->add_option("--growth", join.growth, "ngns | gs");
  j->add_option("--cache", join.cache, "elevator cache size in frames (0 = off)");
  j->add_option("--seed", join.cfg.seed);
  j->add_option("--max-rounds", join.cfg.max_rounds);
  j->add_flag("--no-bailout", join.no_bailout);
  j->add_option("--bailout-threshold", join.cfg.bailout_threshold);
  j->add_flag("--no-role-reversal", join.no_role_reversal);
  j->add_flag("--no-shortcut", join.no_shortcut);
  j->add_flag("--best-match", join.cfg.best_match);
  j->add_flag("--reload", join.cfg.reload_spilled);
  j->add_option("--table-entry-bytes", join.cfg.table_entry_bytes);
  j->add_option("--spill", join.spill, "memory | disk");
  j->add_option("--spill-dir", join.spill_dir, "spill directory (default $HHJ_TMPDIR)");
  j->add_option("--sink", join.sink, "null | output file");
  j->add_option("--stats", join.stats, "stats CSV file (default stdout)");
  j->add_option("--ledger", join.ledger, "write-event ledger CSV file");

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "run an experiment grid and write CSV");
  s->add_option("--experiment", sweep.experiment,
                "partitions | insertion-params | insertion | growth | victim | cost-model");
  s->add_option("--out", sweep.out, "CSV file (default stdout)");
  s->add_option("--memory", sweep.memory)->delimiter(',');
  s->add_option("--inputs", sweep.inputs, "input sizes as multiples of memory")->delimiter(',');
  s->add_option("--datasets", sweep.datasets)->delimiter(',');
  s->add_option("--partitions", sweep.partitions)->delimiter(',');
  s->add_option("--insertion", sweep.insertion)->delimiter(',');
  s->add_option("--victims", sweep.victims)->delimiter(',');
  s->add_option("--growth", sweep.growth)->delimiter(',');
  s->add_option("--cache", sweep.cache)->delimiter(',');
  s->add_option("--seeds", sweep.seeds)->delimiter(',');
  s->add_flag("--skew", sweep.skew);
  s->add_option("--threads", sweep.threads);
  s->add_option("--frame-bytes", sweep.frame_bytes);
  s->add_flag("--summary", sweep.summary, "also print min/max/ratio per metric across policies");

  double cost_r = 0, cost_m = 0;
  std::uint64_t cost_p = 20;
  std::optional<std::uint64_t> cost_x;
  std::string cost_policy = "both";
  auto* c = app.add_subcommand("cost", "analytical build-phase write split");
  c->add_option("--r", cost_r, "build size in frames")->required();
  c->add_option("--m", cost_m, "memory in frames")->required();
  c->add_option("--p", cost_p, "partitions");
  c->add_option("--x", cost_x, "spilled partitions (default: derived)");
  c->add_option("--policy", cost_policy, "ngns | gs | both");

  double ideal_build = 0, ideal_probe = 0, ideal_fudge = kIdealSpillFudge;
  std::uint64_t ideal_mem = 0;
  auto* i = app.add_subcommand("ideal", "minimum spilled frames for known sizes");
  i->add_option("--build", ideal_build)->required();
  i->add_option("--probe", ideal_probe)->required();
  i->add_option("--mem", ideal_mem)->required();
  i->add_option("--fudge", ideal_fudge);

  AcceptanceOptions accept;
  auto* a = app.add_subcommand("accept", "run the acceptance suite");
  a->add_option("--threads", accept.threads);
  a->add_option("--seed", accept.seed);

  std::string config_file;
  for (auto* verb : {g, j, s, c, i, a})
    verb->add_option("--config", config_file, "flat key=value file; command-line flags take precedence");

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "hhjlab: " << e.what() << '\n';
    return 2;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*g) return run_gen(gen);
    if (*j) return run_join_verb(join);
    if (*s) return run_sweep_verb(sweep);
    if (*c) {
      CostModelInput in{cost_r, cost_m, cost_p, 0};
      in.spilled = cost_x ? *cost_x : cost_p - in_memory_partitions(cost_r, cost_m, cost_p);
      std::cout << "policy,spilled_partitions,sequential,random,total\n";
      if (cost_policy != "gs") {
        const auto io = ngns_io_split(in);
        std::cout << "ngns," << in.spilled << ',' << io.sequential << ',' << io.random << ',' << io.total() << '\n';
      }
      if (cost_policy != "ngns") {
        const auto io = gs_io_split(in);
        std::cout << "gs," << in.spilled << ',' << io.sequential << ',' << io.random << ',' << io.total() << '\n';
      }
      return 0;
    }
    if (*i) {
      std::cout << ideal_spill(ideal_build, ideal_probe, ideal_mem, ideal_fudge) << '\n';
      return 0;
    }
    if (*a) {
      bool all = true;
      run_acceptance(accept, [&](const CriterionResult& r) {
        all = all && r.pass;
        std::cout << format_result(r) << std::endl;
      });
      return all ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "hhjlab: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
