#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bref/types.hpp"

namespace bref::harness {

enum class Structure { kList, kSkipList, kTree };

auto ParseStructure(std::string_view text) -> std::optional<Structure>;
auto StructureName(Structure s) -> std::string_view;
auto ParseVariant(std::string_view text) -> std::optional<Variant>;
auto VariantName(Variant v) -> std::string_view;

struct Mix {
  unsigned update = 0;
  unsigned contains = 0;
  unsigned range_query = 0;
};

/// Parses "U:C:RQ" percentages; they must sum to 100.
auto ParseMix(std::string_view text) -> std::optional<Mix>;

/// Parses a relaxation threshold: a positive integer or "inf".
auto ParseRelax(std::string_view text) -> std::optional<std::uint64_t>;

struct WorkloadSpec {
  Structure structure = Structure::kList;
  Variant variant = Variant::kBundled;
  std::uint64_t key_range = 10'000;
  Mix mix{50, 40, 10};
  std::uint64_t rq_size = 50;
  unsigned threads = 1;
  double seconds = 3.0;
  /// Nonzero: every worker runs exactly this many operations instead of
  /// running for `seconds`.
  std::uint64_t ops_per_thread = 0;
  std::uint64_t seed = 1;
  /// 1 = linearizable; kRelaxNever = clock never advances.
  std::uint64_t relax = 1;
  bool reclaim = false;
  std::uint64_t cleanup_delay_ms = 0;
};

/// Empty when valid, otherwise a message naming the offending field.
auto Validate(const WorkloadSpec &spec) -> std::optional<std::string>;

struct RunResult {
  double wall_seconds = 0;
  std::uint64_t total_ops = 0;
  std::uint64_t inserts = 0;
  std::uint64_t inserts_ok = 0;
  std::uint64_t removes = 0;
  std::uint64_t removes_ok = 0;
  std::uint64_t contains = 0;
  std::uint64_t contains_hits = 0;
  std::uint64_t range_queries = 0;
  std::uint64_t rq_keys = 0;
  std::vector<std::uint64_t> per_thread_ops;
  std::size_t prefill = 0;
  std::size_t final_size = 0;
  std::uint64_t final_clock = 0;
  std::uint64_t entries_created = 0;
  std::uint64_t entries_pruned = 0;
  std::uint64_t prune_passes = 0;
  bool invariants_ok = true;
  /// |final size - prefill| within the number of threads; reported only.
  bool size_stable = true;
  std::vector<std::string> problems;

  auto
  Throughput() const -> double
  {
    return wall_seconds > 0 ? static_cast<double>(total_ops) / wall_seconds : 0.0;
  }
};

/// Prefills, runs the workers, joins them and performs the quiescent sweep.
auto RunBenchmark(const WorkloadSpec &spec) -> RunResult;

struct CleanupReport {
  bool fully_pruned = false;
  bool queries_match = false;
  std::size_t bundles = 0;
  std::size_t entries_before = 0;
  std::size_t entries_after = 0;
  std::size_t queries = 0;
  std::vector<std::string> problems;
};

/// Runs the workload (bundled variant), stops it, performs one prune pass and
/// checks that every bundle is down to one entry and that range queries
/// agree with the quiescent contents.
auto RunQuiescentCleanup(const WorkloadSpec &spec) -> CleanupReport;

auto CsvHeader() -> std::string;
auto CsvRow(const WorkloadSpec &spec, const RunResult &result) -> std::string;

/// Appends a row to `path`, writing the header first when the file is new or
/// empty. Throws std::runtime_error naming the path on I/O failure.
void AppendCsv(const std::string &path, const WorkloadSpec &spec, const RunResult &result);

}  // namespace bref::harness
