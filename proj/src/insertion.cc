#include "hhj/insertion.h"

#include <algorithm>
#include <charconv>

#include "hhj/errors.h"

namespace hhj {

void InsertionPolicy::validate() const {
  switch (kind) {
    case InsertionKind::Append:
      if (param < 1) throw ConfigError("append(n) needs n >= 1");
      break;
    case InsertionKind::FirstFitPct:
    case InsertionKind::RandomPct:
      if (param < 1 || param > 100) throw ConfigError("percent parameter must be in (0, 100]");
      break;
    default:
      break;
  }
}

std::size_t InsertionPolicy::search_limit(std::size_t frame_count) const noexcept {
  switch (kind) {
    case InsertionKind::Append:
      return std::min<std::size_t>(param, frame_count);
    case InsertionKind::FirstFitPct:
    case InsertionKind::RandomPct:
      return (frame_count * param + 99) / 100;
    default:
      return frame_count;
  }
}

namespace {

std::uint32_t parse_uint(const std::string& s, const std::string& whole) {
  std::uint32_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("bad insertion policy: " + whole);
  return v;
}

std::uint32_t parse_pct(std::string s, const std::string& whole) {
  if (s.empty() || s.back() != '%') throw ConfigError("percent parameter needs a trailing %: " + whole);
  s.pop_back();
  return parse_uint(s, whole);
}

}  // namespace

InsertionPolicy parse_insertion_policy(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string() : text.substr(colon + 1);
  InsertionPolicy p;
  if (name == "append") {
    p = InsertionPolicy::append(arg.empty() ? 8 : parse_uint(arg, text));
  } else if (name == "firstfit") {
    p = arg.empty() ? InsertionPolicy::first_fit() : InsertionPolicy::first_fit_pct(parse_pct(arg, text));
  } else if (name == "bestfit" && arg.empty()) {
    p = InsertionPolicy::best_fit();
  } else if (name == "nextfit" && arg.empty()) {
    p = InsertionPolicy::next_fit();
  } else if (name == "random") {
    p = InsertionPolicy::random_pct(arg.empty() ? 10 : parse_pct(arg, text));
  } else {
    throw ConfigError("unknown insertion policy: " + text);
  }
  p.validate();
  return p;
}

std::string to_string(const InsertionPolicy& p) {
  switch (p.kind) {
    case InsertionKind::Append:
      return "append:" + std::to_string(p.param);
    case InsertionKind::FirstFit:
      return "firstfit";
    case InsertionKind::FirstFitPct:
      return "firstfit:" + std::to_string(p.param) + "%";
    case InsertionKind::BestFit:
      return "bestfit";
    case InsertionKind::NextFit:
      return "nextfit";
    case InsertionKind::RandomPct:
      return "random:" + std::to_string(p.param) + "%";
  }
  return "?";
}

std::vector<InsertionPolicy> all_insertion_policies() {
  return {InsertionPolicy::append(8),        InsertionPolicy::first_fit(), InsertionPolicy::first_fit_pct(10),
          InsertionPolicy::best_fit(),       InsertionPolicy::next_fit(),  InsertionPolicy::random_pct(10)};
}

namespace {

// Scans newest -> oldest over at most `limit` frames.
std::optional<std::size_t> scan_newest_first(std::span<const FrameView> frames, std::size_t limit, std::size_t need,
                                             SearchStats& stats) {
  const std::size_t n = frames.size();
  for (std::size_t k = 0; k < limit && k < n; ++k) {
    const std::size_t i = n - 1 - k;
    ++stats.frames_searched;
    if (frames[i].free >= need) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> next_fit(std::span<const FrameView> frames, const NextFitCursor& cursor, std::size_t need,
                                    SearchStats& stats) {
  const std::size_t n = frames.size();
  if (!cursor.last_index) return scan_newest_first(frames, n, need, stats);
  const std::size_t start = std::min(*cursor.last_index, n - 1);
  auto probe = [&](std::size_t i) {
    ++stats.frames_searched;
    return frames[i].free >= need;
  };
  if (need >= cursor.last_record_size) {
    // Larger (or equal) record: only newer frames, no wrap.
    for (std::size_t i = start; i < n; ++i)
      if (probe(i)) return i;
    return std::nullopt;
  }
  for (std::size_t i = start + 1; i-- > 0;)
    if (probe(i)) return i;
  for (std::size_t i = start + 1; i < n; ++i)
    if (probe(i)) return i;
  return std::nullopt;
}

std::optional<std::size_t> random_pct(std::span<const FrameView> frames, std::size_t limit, std::size_t need,
                                      SplitMix64& rng, SearchStats& stats) {
  const std::size_t n = frames.size();
  limit = std::min(limit, n);
  // Floyd's sampling of `limit` distinct indices, then a shuffle so the
  // inspection order is uniform too.
  std::vector<std::size_t> picked;
  picked.reserve(limit);
  for (std::size_t j = n - limit; j < n; ++j) {
    const auto t = static_cast<std::size_t>(rng.below(j + 1));
    if (std::find(picked.begin(), picked.end(), t) == picked.end())
      picked.push_back(t);
    else
      picked.push_back(j);
  }
  for (std::size_t i = picked.size(); i > 1; --i) std::swap(picked[i - 1], picked[rng.below(i)]);
  for (std::size_t i : picked) {
    ++stats.frames_searched;
    if (frames[i].free >= need) return i;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::size_t> choose_frame(const InsertionPolicy& policy, std::span<const FrameView> frames,
                                        const NextFitCursor& cursor, std::size_t need, SplitMix64& rng,
                                        SearchStats& stats) {
  ++stats.inserts;
  if (frames.empty()) return std::nullopt;
  switch (policy.kind) {
    case InsertionKind::Append:
    case InsertionKind::FirstFit:
    case InsertionKind::FirstFitPct:
      return scan_newest_first(frames, policy.search_limit(frames.size()), need, stats);
    case InsertionKind::BestFit: {
      std::optional<std::size_t> best;
      for (std::size_t k = frames.size(); k-- > 0;) {
        ++stats.frames_searched;
        if (frames[k].free >= need && (!best || frames[k].free < frames[*best].free)) best = k;
      }
      return best;
    }
    case InsertionKind::NextFit:
      return next_fit(frames, cursor, need, stats);
    case InsertionKind::RandomPct:
      return random_pct(frames, policy.search_limit(frames.size()), need, rng, stats);
  }
  return std::nullopt;
}

std::optional<double> average_frame_fullness(std::span<const FrameFill> frames) {
  std::uint64_t used = 0;
  std::uint64_t cap = 0;
  for (const FrameFill& f : frames) {
    used += f.used;
    cap += f.capacity;
  }
  if (cap == 0) return std::nullopt;
  return static_cast<double>(used) / static_cast<double>(cap);
}

}  // namespace hhj
