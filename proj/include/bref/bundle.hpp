#pragma once

#include <array>
#include <atomic>
#include <cassert>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "bref/clock.hpp"
#include "bref/hooks.hpp"
#include "bref/per_thread.hpp"
#include "bref/spin.hpp"
#include "bref/types.hpp"

namespace bref {

/// One timestamped historical value of a link.
///
/// target and the finalized ts never change after installation; next only
/// changes when pruning cuts the chain below this entry.
template <class Node>
struct BundleEntry {
  BundleEntry(Node *target_node, Timestamp stamp, BundleEntry *older)
      : target{target_node}, ts{stamp}, next{older}
  {
  }

  Node *const target;
  std::atomic<Timestamp> ts;
  std::atomic<BundleEntry *> next;
};

/// Deletes a detached chain of entries.
template <class Node>
void
DeleteChain(BundleEntry<Node> *entry) noexcept
{
  while (entry != nullptr) {
    auto *older = entry->next.load(std::memory_order_relaxed);
    delete entry;
    entry = older;
  }
}

/// Result of walking one bundle in quiescence.
struct ChainCheck {
  bool ok = true;
  std::size_t length = 0;
  std::string problem;
};

/// History of one structural link, newest entry first.
template <class Node>
class Bundle
{
 public:
  using Entry = BundleEntry<Node>;

  Bundle() = default;
  Bundle(const Bundle &) = delete;
  auto operator=(const Bundle &) -> Bundle & = delete;

  ~Bundle() { DeleteChain(head_.load(std::memory_order_relaxed)); }

  /// Installs a finalized entry. Only valid before the owner is shared.
  void
  Init(Node *target, Timestamp ts)
  {
    head_.store(new Entry{target, ts, head_.load(std::memory_order_relaxed)},
                std::memory_order_release);
  }

  auto
  Head() const noexcept -> Entry *
  {
    return head_.load(std::memory_order_acquire);
  }

  /// Installs a PENDING entry for `target` at the head. Waits while the
  /// current head is itself pending so entries stay ordered by timestamp.
  template <class Hooks = NoHooks>
  auto
  Prepare(Node *target) -> Entry *
  {
    auto *entry = new Entry{target, kPendingTs, nullptr};
    Backoff backoff;
    while (true) {
      auto *expected = head_.load(std::memory_order_acquire);
      if (Hooks::UpdateWaitsForPending()) {
        while (expected != nullptr &&
               expected->ts.load(std::memory_order_acquire) == kPendingTs) {
          backoff.Pause();
        }
      }
      entry->next.store(expected, std::memory_order_relaxed);
      if (head_.compare_exchange_weak(expected, entry, std::memory_order_acq_rel,
                                      std::memory_order_acquire)) {
        return entry;
      }
    }
  }

  /// Stamps the pending head with `ts`.
  void
  Finalize(Timestamp ts) noexcept
  {
    auto *head = head_.load(std::memory_order_acquire);
    assert(head != nullptr);
    head->ts.store(ts, std::memory_order_release);
  }

  /// Returns the target of the newest entry with timestamp <= ts, waiting
  /// first for a pending head. found = false when no entry qualifies.
  template <class Hooks = NoHooks>
  auto
  Dereference(Timestamp ts) const -> std::pair<Node *, bool>
  {
    auto *entry = head_.load(std::memory_order_acquire);
    if (entry == nullptr) return {nullptr, false};

    if (Hooks::RangeQueryWaitsForPending()) {
      Backoff backoff;
      while (entry->ts.load(std::memory_order_acquire) == kPendingTs) backoff.Pause();
    }
    while (entry != nullptr && entry->ts.load(std::memory_order_acquire) > ts) {
      entry = entry->next.load(std::memory_order_acquire);
    }
    if (entry == nullptr) return {nullptr, false};
    return {entry->target, true};
  }

  /// True when Prune(min_active) would detach something. Takes no latch.
  auto
  Prunable(Timestamp min_active) const -> bool
  {
    auto *keep = head_.load(std::memory_order_acquire);
    while (keep != nullptr && keep->ts.load(std::memory_order_acquire) > min_active) {
      keep = keep->next.load(std::memory_order_acquire);
    }
    return keep != nullptr && keep->next.load(std::memory_order_acquire) != nullptr;
  }

  /// Detaches every entry older than the newest one satisfying min_active
  /// and hands the detached chain to `retire`. Returns the number detached.
  template <class RetireChain>
  auto
  Prune(Timestamp min_active, RetireChain &&retire) -> std::size_t
  {
    auto *keep = head_.load(std::memory_order_acquire);
    while (keep != nullptr && keep->ts.load(std::memory_order_acquire) > min_active) {
      keep = keep->next.load(std::memory_order_acquire);
    }
    if (keep == nullptr) return 0;

    auto *rest = keep->next.exchange(nullptr, std::memory_order_acq_rel);
    if (rest == nullptr) return 0;

    std::size_t count = 0;
    for (auto *e = rest; e != nullptr; e = e->next.load(std::memory_order_relaxed)) ++count;
    retire(rest);
    return count;
  }

  /// (ts, target) pairs newest first. Quiescent use only.
  auto
  Chain() const -> std::vector<std::pair<Timestamp, Node *>>
  {
    std::vector<std::pair<Timestamp, Node *>> out;
    for (auto *e = Head(); e != nullptr; e = e->next.load(std::memory_order_acquire)) {
      out.emplace_back(e->ts.load(std::memory_order_acquire), e->target);
    }
    return out;
  }

  /// Checks the chain ordering and, when given, that the head mirrors the
  /// newest link. strict = false tolerates equal neighbouring timestamps,
  /// which relaxed clocks produce.
  auto
  Check(bool strict, bool check_target = false, const Node *newest = nullptr) const
      -> ChainCheck
  {
    ChainCheck result;
    auto *head = Head();
    if (head == nullptr) {
      result.ok = false;
      result.problem = "empty bundle";
      return result;
    }
    if (check_target && head->target != newest) {
      result.ok = false;
      result.problem = "bundle head differs from newest link";
    }
    Timestamp prev = kPendingTs;
    bool first = true;
    for (auto *e = head; e != nullptr; e = e->next.load(std::memory_order_acquire)) {
      const auto ts = e->ts.load(std::memory_order_acquire);
      ++result.length;
      if (ts == kPendingTs) {
        result.ok = false;
        result.problem = "pending entry in quiescent bundle";
      } else if (!first && (strict ? ts >= prev : ts > prev)) {
        result.ok = false;
        result.problem = "timestamps not descending";
      }
      prev = ts;
      first = false;
    }
    return result;
  }

 private:
  std::atomic<Entry *> head_{nullptr};
};

/// Everything one update needs to linearize: the link written at the
/// linearization point and the bundles that record the new physical state.
template <class Node, class Link>
struct UpdatePlan {
  static constexpr std::size_t kCapacity = 4;

  UpdatePlan(std::atomic<Link> *addr, Link value) : lin_addr{addr}, lin_value{value} {}

  void
  Add(Bundle<Node> *bundle, Node *target)
  {
    assert(size < kCapacity);
    bundles[size] = bundle;
    targets[size] = target;
    ++size;
  }

  std::atomic<Link> *lin_addr;
  Link lin_value;
  std::array<Bundle<Node> *, kCapacity> bundles{};
  std::array<Node *, kCapacity> targets{};
  std::size_t size = 0;
};

/// Prepare every bundle, take a timestamp, perform the linearization write,
/// finalize every bundle. Writes are published in timestamp order; otherwise
/// an update stamped earlier could become visible after one stamped later had
/// already completed, and a range query between the two stamps would observe
/// an order no other operation agrees with. Returns the timestamp. Caller holds whatever
/// latches its structure requires around the written locations.
template <class Hooks = NoHooks, class Node, class Link>
auto
LinearizeUpdate(const UpdatePlan<Node, Link> &plan, GlobalClock &clock,
                PerThreadCounter *entries_created = nullptr) -> Timestamp
{
  assert(plan.size >= 1);
  for (std::size_t i = 0; i < plan.size; ++i) {
    plan.bundles[i]->template Prepare<Hooks>(plan.targets[i]);
  }
  if (entries_created != nullptr) entries_created->Add(plan.size);
  Hooks::At(HookPoint::kAfterPrepare);

  const auto ts = clock.Stamp();
  Hooks::At(HookPoint::kAfterClock);

  clock.AwaitTurn(ts);
  plan.lin_addr->store(plan.lin_value, std::memory_order_seq_cst);
  clock.Publish(ts);
  Hooks::At(HookPoint::kAfterLinearization);

  for (std::size_t i = 0; i < plan.size; ++i) plan.bundles[i]->Finalize(ts);
  Hooks::At(HookPoint::kAfterFinalize);
  return ts;
}

}  // namespace bref
