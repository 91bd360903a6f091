#include <algorithm>
#include <atomic>
#include <chrono>
#include <memory>
#include <random>
#include <thread>
#include <vector>

#include "bref/citrus_tree.hpp"
#include "bref/harness/workload.hpp"
#include "bref/lazy_list.hpp"
#include "bref/lazy_skip_list.hpp"

namespace bref::harness {
namespace {

using Clock = std::chrono::steady_clock;

auto
SplitMix(std::uint64_t x) -> std::uint64_t
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct WorkerCounts {
  std::uint64_t ops = 0;
  std::uint64_t inserts = 0;
  std::uint64_t inserts_ok = 0;
  std::uint64_t removes = 0;
  std::uint64_t removes_ok = 0;
  std::uint64_t contains = 0;
  std::uint64_t contains_hits = 0;
  std::uint64_t range_queries = 0;
  std::uint64_t rq_keys = 0;
};

template <class DS>
auto
Prefill(DS &ds, const WorkloadSpec &spec) -> std::size_t
{
  std::mt19937_64 rng{SplitMix(spec.seed)};
  std::uniform_int_distribution<Key> key_dist{1, spec.key_range};
  const std::size_t target = spec.key_range / 2;
  std::size_t inserted = 0;
  while (inserted < target) {
    const auto key = key_dist(rng);
    if (ds.Insert(key, key)) ++inserted;
  }
  return inserted;
}

template <class DS>
void
Work(DS &ds, const WorkloadSpec &spec, unsigned tid, const std::atomic<bool> &go,
     const std::atomic<bool> &stop, WorkerCounts &counts)
{
  std::mt19937_64 rng{SplitMix(spec.seed ^ (static_cast<std::uint64_t>(tid) + 1) * 0x100000001B3ULL)};
  std::uniform_int_distribution<Key> key_dist{1, spec.key_range};
  std::uniform_int_distribution<unsigned> pct{0, 99};
  WorkerCounts c;
  while (!go.load(std::memory_order_acquire)) std::this_thread::yield();

  const bool timed = spec.ops_per_thread == 0;
  for (std::uint64_t i = 0; timed ? !stop.load(std::memory_order_relaxed) : i < spec.ops_per_thread;
       ++i) {
    const auto roll = pct(rng);
    const auto key = key_dist(rng);
    if (roll < spec.mix.update) {
      if ((rng() & 1U) == 0) {
        ++c.inserts;
        c.inserts_ok += ds.Insert(key, key) ? 1 : 0;
      } else {
        ++c.removes;
        c.removes_ok += ds.Remove(key) ? 1 : 0;
      }
    } else if (roll < spec.mix.update + spec.mix.contains) {
      ++c.contains;
      c.contains_hits += ds.Contains(key) ? 1 : 0;
    } else {
      ++c.range_queries;
      const auto high = std::min(key + spec.rq_size, spec.key_range);
      c.rq_keys += ds.RangeQuery(key, high).size();
    }
    ++c.ops;
  }
  counts = c;
}

/// Runs workers against `ds`; fills the operation counters of `result`.
template <class DS>
void
RunWorkers(DS &ds, const WorkloadSpec &spec, RunResult &result)
{
  std::vector<WorkerCounts> counts(spec.threads);
  std::atomic<bool> go{false};
  std::atomic<bool> stop{false};
  std::vector<std::thread> workers;
  workers.reserve(spec.threads);
  for (unsigned t = 0; t < spec.threads; ++t) {
    workers.emplace_back([&, t] { Work(ds, spec, t, go, stop, counts[t]); });
  }

  const auto start = Clock::now();
  go.store(true, std::memory_order_release);
  if (spec.ops_per_thread == 0) {
    std::this_thread::sleep_for(std::chrono::duration<double>(spec.seconds));
    stop.store(true, std::memory_order_relaxed);
  }
  for (auto &w : workers) w.join();
  result.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();

  for (const auto &c : counts) {
    result.per_thread_ops.push_back(c.ops);
    result.total_ops += c.ops;
    result.inserts += c.inserts;
    result.inserts_ok += c.inserts_ok;
    result.removes += c.removes;
    result.removes_ok += c.removes_ok;
    result.contains += c.contains;
    result.contains_hits += c.contains_hits;
    result.range_queries += c.range_queries;
    result.rq_keys += c.rq_keys;
  }
}

template <class DS>
auto
MakePruner(DS &ds, const WorkloadSpec &spec) -> std::unique_ptr<BackgroundPruner>
{
  if constexpr (DS::kBundled) {
    if (spec.reclaim) {
      return std::make_unique<BackgroundPruner>(
          std::chrono::milliseconds(spec.cleanup_delay_ms),
          std::vector<BackgroundPruner::Pass>{[&ds] { return ds.Prune(); }});
    }
  }
  return nullptr;
}

template <class DS>
auto
Run(const WorkloadSpec &spec) -> RunResult
{
  RunResult result;
  auto runtime = std::make_shared<Runtime>(RuntimeOptions{spec.reclaim, spec.relax, false});
  DS ds{runtime};
  result.prefill = Prefill(ds, spec);

  auto pruner = MakePruner(ds, spec);
  if (pruner) pruner->Start();
  RunWorkers(ds, spec, result);
  if (pruner) {
    pruner->Stop();
    result.prune_passes = pruner->PassesRun();
  }

  const bool strict = spec.relax == 1;
  auto report = ds.CheckInvariants(strict);
  result.invariants_ok = report.ok;
  result.problems = report.problems;
  result.final_size = report.nodes;
  result.final_clock = runtime->Clock().Read();
  result.entries_created = runtime->entries_created.Sum();
  result.entries_pruned = runtime->entries_pruned.Sum();

  const auto expected_size = result.prefill + result.inserts_ok - result.removes_ok;
  if (result.final_size != expected_size) {
    result.invariants_ok = false;
    result.problems.push_back("final size " + std::to_string(result.final_size) +
                              " differs from prefill + inserts - removes = " +
                              std::to_string(expected_size));
  }
  if constexpr (DS::kBundled) {
    const auto updates = result.prefill + result.inserts_ok + result.removes_ok;
    if (spec.relax == 1 && result.final_clock != updates) {
      result.invariants_ok = false;
      result.problems.push_back("clock " + std::to_string(result.final_clock) +
                                " differs from successful updates " + std::to_string(updates));
    }
    if (runtime->missing_entries.Sum() != 0) {
      result.invariants_ok = false;
      result.problems.push_back("range queries hit missing bundle entries");
    }
  }
  const auto drift = result.final_size > result.prefill ? result.final_size - result.prefill
                                                        : result.prefill - result.final_size;
  result.size_stable = drift <= spec.threads;
  return result;
}

template <class DS>
auto
Cleanup(const WorkloadSpec &spec) -> CleanupReport
{
  CleanupReport report;
  auto runtime = std::make_shared<Runtime>(RuntimeOptions{true, 1, false});
  DS ds{runtime};
  Prefill(ds, spec);
  auto pruner_spec = spec;
  pruner_spec.reclaim = true;
  auto pruner = MakePruner(ds, pruner_spec);
  pruner->Start();
  RunResult ignored;
  RunWorkers(ds, spec, ignored);
  pruner->Stop();

  report.entries_before = ds.CheckInvariants().entries;
  ds.Prune();
  auto after = ds.CheckInvariants();
  report.bundles = after.bundles;
  report.entries_after = after.entries;
  report.fully_pruned = after.FullyPruned();
  for (auto &p : after.problems) report.problems.push_back(std::move(p));

  const auto items = ds.Items();
  std::mt19937_64 rng{SplitMix(spec.seed + 7)};
  std::uniform_int_distribution<Key> key_dist{1, spec.key_range};
  report.queries_match = true;
  auto check = [&](Key low, Key high) {
    auto got = ds.RangeQuery(low, high);
    std::sort(got.begin(), got.end());
    const auto first = std::lower_bound(items.begin(), items.end(), KeyValue{low, 0});
    const auto last = std::upper_bound(items.begin(), items.end(), KeyValue{high, kMaxKey});
    ++report.queries;
    if (!std::equal(got.begin(), got.end(), first, last)) {
      if (report.queries_match) {
        report.problems.push_back("range [" + std::to_string(low) + ", " + std::to_string(high) +
                                  "] disagrees with contents");
      }
      report.queries_match = false;
    }
  };
  check(1, spec.key_range);
  for (int i = 0; i < 500; ++i) {
    const auto low = key_dist(rng);
    check(low, std::min(low + spec.rq_size, spec.key_range));
  }
  if (runtime->missing_entries.Sum() != 0) {
    report.queries_match = false;
    report.problems.emplace_back("range queries hit missing bundle entries");
  }
  return report;
}

template <template <Variant, class> class DS>
auto
Dispatch(const WorkloadSpec &spec) -> RunResult
{
  if (spec.variant == Variant::kBundled) return Run<DS<Variant::kBundled, NoHooks>>(spec);
  return Run<DS<Variant::kUnsafe, NoHooks>>(spec);
}

}  // namespace

auto
RunBenchmark(const WorkloadSpec &spec) -> RunResult
{
  switch (spec.structure) {
    case Structure::kList: return Dispatch<LazyList>(spec);
    case Structure::kSkipList: return Dispatch<LazySkipList>(spec);
    case Structure::kTree: return Dispatch<CitrusTree>(spec);
  }
  return {};
}

auto
RunQuiescentCleanup(const WorkloadSpec &spec) -> CleanupReport
{
  switch (spec.structure) {
    case Structure::kList: return Cleanup<LazyList<Variant::kBundled, NoHooks>>(spec);
    case Structure::kSkipList: return Cleanup<LazySkipList<Variant::kBundled, NoHooks>>(spec);
    case Structure::kTree: return Cleanup<CitrusTree<Variant::kBundled, NoHooks>>(spec);
  }
  return {};
}

}  // namespace bref::harness
