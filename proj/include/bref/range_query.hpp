#pragma once

#include <cstddef>
#include <utility>

#include "bref/bundle.hpp"
#include "bref/hooks.hpp"
#include "bref/reclaim.hpp"
#include "bref/types.hpp"

namespace bref {

/// Per-query instrumentation.
struct ScanStats {
  Timestamp ts = 0;
  /// Invalid entry traversals that forced a fresh clock read.
  std::size_t restarts = 0;
  /// Nodes reached inside the range phase whose key lies in [low, high].
  std::size_t in_range_visits = 0;
  /// All nodes reached inside the range phase, including the boundary
  /// node that ends a list scan and out-of-range tree nodes.
  std::size_t total_visits = 0;
};

/// A structure-specific scan over a snapshot. First() enters the range and
/// reports {node, valid}; Next() continues from the previous node.
template <class S, class Node>
concept SnapshotScan = requires(S scan, Node *node, Key key, Timestamp ts, ScanStats *stats) {
  { scan.First(key, key, ts, stats) } -> std::same_as<std::pair<Node *, bool>>;
  { scan.Next(node, key, key, ts, stats) } -> std::same_as<Node *>;
};

/// Reads a snapshot timestamp, enters the range through the scan and walks it,
/// restarting with a fresh timestamp whenever the entry traversal is invalid.
/// `take_ts` supplies the snapshot timestamp (normally an announcement).
/// Returns the timestamp the successful attempt used.
template <class Hooks, class Node, class Scan, class TakeTs, class Sink>
  requires SnapshotScan<Scan, Node>
auto
RunRangeQuery(Key low, Key high, Scan &scan, TakeTs &&take_ts, Sink &&sink,
              ScanStats *stats = nullptr) -> Timestamp
{
  while (true) {
    const Timestamp ts = take_ts();
    Hooks::At(HookPoint::kRangeQueryAfterClock);
    auto [node, valid] = scan.First(low, high, ts, stats);
    if (!valid) {
      if (stats != nullptr) ++stats->restarts;
      continue;
    }
    if (stats != nullptr) stats->ts = ts;
    for (; node != nullptr; node = scan.Next(node, low, high, ts, stats)) sink(node);
    return ts;
  }
}

}  // namespace bref
