#pragma once

#include <cstdint>
#include <string>

#include "bref/harness/workload.hpp"
#include "bref/lincheck/checker.hpp"
#include "bref/lincheck/history.hpp"

namespace bref::lincheck {

using harness::Structure;

struct RandomHistoryOptions {
  unsigned threads = 4;
  unsigned ops_per_thread = 30;
  Key key_space = 16;  // keys 1..key_space
  std::uint32_t chaos_per_mille = 150;
  std::uint64_t budget = 5'000'000;
};

struct RandomRun {
  History history;
  std::uint64_t initial = 0;
  CheckResult result;
};

/// Records one concurrent history on a bundled structure built with test
/// hooks and checks it.
auto RunRandomHistory(Structure s, std::uint64_t seed, const RandomHistoryOptions &options = {})
    -> RandomRun;

struct ScenarioOutcome {
  bool ok = false;
  std::string detail;
};

/// T1's insert(x) stops after its linearization write with bundles still
/// pending; T2 runs contains(x) and then a range query covering x. ok iff
/// contains is true and the range query includes x. `rq_waits` = false
/// disables the range-query wait on pending entries.
auto PendingStallScenario(Structure s, bool rq_waits) -> ScenarioOutcome;

/// T1's insert(x) stops before taking its timestamp. ok iff contains(x) is
/// false and a range query started meanwhile excludes x.
auto NeverLinearizedScenario(Structure s) -> ScenarioOutcome;

/// T1's insert(x) stops after linking x with its bundles pending; T2 then
/// inserts y directly after x, preparing x's bundle. ok iff every bundle
/// chain is timestamp-ordered and nothing is left pending. `update_waits` =
/// false disables the prepare-side wait.
auto UnlockedSuccessorScenario(Structure s, bool update_waits) -> ScenarioOutcome;

struct ReplayOutcome {
  bool ok = true;
  std::uint64_t queries = 0;
  std::string detail;
};

/// Single-threaded random traces compared with the sequential oracle; after
/// every prefix all range queries [low, high] with 1 <= low <= high <=
/// key_space are checked.
auto SequentialReplay(Structure s, Key key_space, unsigned traces, unsigned ops_per_trace,
                      std::uint64_t seed) -> ReplayOutcome;

}  // namespace bref::lincheck
