#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hhj/engine.h"

namespace hhj {

// Reference join results used to check the engine: a join pair reduced to
// its key and payload fingerprints, compared as sorted multisets.
namespace oracle {

struct Pair {
  std::int64_t key = 0;
  std::uint64_t build = 0;
  std::uint64_t probe = 0;

  auto operator<=>(const Pair&) const = default;
};

std::uint64_t fingerprint(std::span<const std::uint8_t> payload) noexcept;

// Quadratic; for small inputs.
std::vector<Pair> nested_loop(std::span<const std::uint8_t> build, std::span<const std::uint8_t> probe);
// Sorts both inputs by key and pairs equal runs.
std::vector<Pair> sort_merge(std::span<const std::uint8_t> build, std::span<const std::uint8_t> probe);

class CollectingSink final : public JoinSink {
 public:
  void emit(const RecordView& b, const RecordView& p) override;
  // Sorted copy of everything emitted.
  std::vector<Pair> sorted() const;

 private:
  std::vector<Pair> pairs_;
};

}  // namespace oracle

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
  // Deterministic output of the run (CSV), compared by the determinism check.
  std::string artifact;
};

struct AcceptanceOptions {
  unsigned threads = 1;
  std::uint64_t seed = 1;
};

// Runs every criterion in order, reporting each result as it completes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

// "PASS  3 memory-utilization  detail  (1.23 s)"
std::string format_result(const CriterionResult& r);

}  // namespace hhj
