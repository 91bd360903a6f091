#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "bref/bundle.hpp"
#include "bref/hooks.hpp"
#include "bref/invariants.hpp"
#include "bref/range_query.hpp"
#include "bref/reclaim.hpp"
#include "bref/types.hpp"

namespace bref {

/// Lazy sorted linked list with bundled next links.
///
/// Contains and traversals are wait-free and read only the newest links.
/// Inserts lock the predecessor alone; removes lock predecessor and victim and
/// linearize at the logical-deletion flag. Range queries enter their range
/// through bundles and see the set as of their snapshot timestamp.
template <Variant V = Variant::kBundled, class Hooks = NoHooks>
class LazyList
{
 public:
  static constexpr bool kBundled = V == Variant::kBundled;

  struct Node {
    Node(Key k, Value v, Node *successor) : key{k}, value{v}, next{successor} {}

    void
    Poison() noexcept
    {
      poisoned.store(true, std::memory_order_relaxed);
    }

    const Key key;
    const Value value;
    Latch latch;
    std::atomic<bool> deleted{false};
    std::atomic<Node *> next;
    Bundle<Node> bundle;
    std::atomic<bool> poisoned{false};
  };

  explicit LazyList(std::shared_ptr<Runtime> runtime = std::make_shared<Runtime>())
      : runtime_{std::move(runtime)}
  {
    tail_ = new Node{kMaxKey, 0, nullptr};
    head_ = new Node{kMinKey, 0, tail_};
    if constexpr (kBundled) head_->bundle.Init(tail_, 0);
  }

  LazyList(const LazyList &) = delete;
  auto operator=(const LazyList &) -> LazyList & = delete;

  ~LazyList()
  {
    for (auto *n = head_; n != nullptr;) {
      auto *next = n->next.load(std::memory_order_relaxed);
      delete n;
      n = next;
    }
  }

  auto
  Contains(Key key) -> bool
  {
    EpochGuard guard{runtime_->Epochs()};
    auto *curr = Locate(key).second;
    return curr->key == key && !curr->deleted.load(std::memory_order_acquire);
  }

  auto
  Insert(Key key, Value value) -> bool
  {
    EpochGuard guard{runtime_->Epochs()};
    while (true) {
      auto [pred, curr] = Locate(key);
      std::unique_lock lock{pred->latch};
      if (!Validate(pred, curr)) continue;
      if (curr->key == key) return false;

      Hooks::At(HookPoint::kBeforeUpdate);
      auto *node = new Node{key, value, curr};
      if constexpr (kBundled) {
        UpdatePlan<Node, Node *> plan{&pred->next, node};
        plan.Add(&node->bundle, curr);
        plan.Add(&pred->bundle, node);
        LinearizeUpdate<Hooks>(plan, runtime_->Clock(), &runtime_->entries_created);
      } else {
        pred->next.store(node, std::memory_order_seq_cst);
      }
      return true;
    }
  }

  auto
  Remove(Key key) -> bool
  {
    EpochGuard guard{runtime_->Epochs()};
    while (true) {
      auto [pred, curr] = Locate(key);
      std::unique_lock pred_lock{pred->latch};
      std::unique_lock curr_lock{curr->latch};
      if (!Validate(pred, curr)) continue;
      if (curr->key != key) return false;

      Hooks::At(HookPoint::kBeforeUpdate);
      auto *succ = curr->next.load(std::memory_order_acquire);
      if constexpr (kBundled) {
        UpdatePlan<Node, bool> plan{&curr->deleted, true};
        plan.Add(&pred->bundle, succ);
        LinearizeUpdate<Hooks>(plan, runtime_->Clock(), &runtime_->entries_created);
      } else {
        curr->deleted.store(true, std::memory_order_seq_cst);
      }
      pred->next.store(succ, std::memory_order_release);
      curr_lock.unlock();
      pred_lock.unlock();
      runtime_->Epochs().Retire(curr);
      return true;
    }
  }

  /// Linearizable snapshot of [low, high] (inclusive). The unsafe variant
  /// walks newest links and gives no snapshot guarantee.
  auto
  RangeQuery(Key low, Key high, ScanStats *stats = nullptr) -> std::vector<KeyValue>
  {
    std::vector<KeyValue> out;
    EpochGuard guard{runtime_->Epochs()};
    if constexpr (!kBundled) {
      for (auto *n = Locate(low).second; n->key <= high; n = n->next.load(std::memory_order_acquire)) {
        if (!n->deleted.load(std::memory_order_acquire)) out.push_back({n->key, n->value});
      }
      return out;
    } else {
      Scan scan{this};
      RunRangeQuery<Hooks, Node>(
          low, high, scan, [this] { return runtime_->BeginRangeQuery(); },
          [&out](Node *n) { out.push_back({n->key, n->value}); }, stats);
      runtime_->EndRangeQuery();
      return out;
    }
  }

  /// Range query at a caller-chosen timestamp. Only meaningful while no
  /// pruning runs (replays and tests).
  auto
  RangeQueryAt(Key low, Key high, Timestamp ts, ScanStats *stats = nullptr)
      -> std::vector<KeyValue>
    requires kBundled
  {
    std::vector<KeyValue> out;
    EpochGuard guard{runtime_->Epochs()};
    Scan scan{this};
    auto [node, valid] = scan.First(low, high, ts, stats);
    if (!valid) return out;
    for (; node != nullptr; node = scan.Next(node, low, high, ts, stats)) {
      out.push_back({node->key, node->value});
    }
    return out;
  }

  /// One pruning pass: truncates every reachable bundle below the entry
  /// satisfying the oldest active range query. Returns entries recycled.
  auto
  Prune() -> std::size_t
    requires kBundled
  {
    std::size_t recycled = 0;
    {
      EpochGuard guard{runtime_->Epochs()};
      const auto min_active = runtime_->MinActiveRangeQuery();
      std::size_t visited = 0;
      for (auto *n = head_; n != tail_; n = n->next.load(std::memory_order_acquire)) {
        PruneStep(visited);
        if (!n->bundle.Prunable(min_active)) continue;
        std::lock_guard lock{n->latch};
        recycled += n->bundle.Prune(min_active, [this](BundleEntry<Node> *chain) {
          runtime_->Epochs().template RetireWith<BundleEntry<Node>, &DeleteChain<Node>>(chain);
        });
      }
    }
    runtime_->entries_pruned.Add(recycled);
    if (runtime_->Reclaiming()) {
      runtime_->Epochs().TryAdvance();
      runtime_->Epochs().Collect();
    }
    return recycled;
  }

  /// Quiescent sweep: order, reachability of live nodes only, bundle chains
  /// and head freshness. strict = false allows equal timestamps (relaxed clock).
  auto
  CheckInvariants(bool strict = true) const -> InvariantReport
  {
    InvariantReport report;
    for (auto *n = head_; n != tail_;) {
      auto *next = n->next.load(std::memory_order_acquire);
      if (next == nullptr) {
        report.Fail("list does not reach tail");
        break;
      }
      if (next->key <= n->key) report.Fail("keys not ascending at " + std::to_string(n->key));
      if (n != head_) {
        ++report.nodes;
        if (n->deleted.load()) report.Fail("deleted node reachable: " + std::to_string(n->key));
      }
      if constexpr (kBundled) {
        report.Account(n->bundle.Check(strict, true, next), "node " + std::to_string(n->key));
      }
      n = next;
    }
    return report;
  }

  /// (ts, target key) pairs of the bundle of the node holding `key`
  /// (kMinKey = head sentinel), including nodes only reachable through bundle
  /// history. Empty if no such node exists. Quiescent use only.
  auto
  BundleChain(Key key) const -> std::vector<std::pair<Timestamp, Key>>
    requires kBundled
  {
    std::vector<std::pair<Timestamp, Key>> out;
    if (const auto *n = FindAnywhere(key)) {
      for (auto [ts, target] : n->bundle.Chain()) out.emplace_back(ts, target->key);
    }
    return out;
  }

  /// Key of the first snapshot node in [low, high] at ts, or kMaxKey when
  /// the range is empty; second = false when the entry traversal is invalid.
  auto
  FirstInRange(Key low, Key high, Timestamp ts) -> std::pair<Key, bool>
    requires kBundled
  {
    EpochGuard guard{runtime_->Epochs()};
    Scan scan{this};
    auto [node, valid] = scan.First(low, high, ts, nullptr);
    return {node == nullptr ? kMaxKey : node->key, valid};
  }

  /// Key of the snapshot successor at ts of the node holding `key` when it is
  /// within high, otherwise kMaxKey.
  auto
  NextInRange(Key key, Key high, Timestamp ts) -> Key
    requires kBundled
  {
    EpochGuard guard{runtime_->Epochs()};
    auto *node = FindAnywhere(key);
    if (node == nullptr) return kMaxKey;
    Scan scan{this};
    auto *next = scan.Next(node, kMinKey, high, ts, nullptr);
    return next == nullptr ? kMaxKey : next->key;
  }

  /// Current contents via newest links. Quiescent use only.
  auto
  Items() const -> std::vector<KeyValue>
  {
    std::vector<KeyValue> out;
    for (auto *n = head_->next.load(); n != tail_; n = n->next.load()) out.push_back({n->key, n->value});
    return out;
  }

  auto Size() const -> std::size_t { return Items().size(); }
  auto GetRuntime() -> Runtime & { return *runtime_; }

 private:
  /// Stateless scan: entry through bundles from the last node below low.
  struct Scan {
    LazyList *list;

    auto
    First(Key low, Key high, Timestamp ts, ScanStats *stats) -> std::pair<Node *, bool>
    {
      auto *node = list->Locate(low).first;
      Node *found = nullptr;
      while (true) {
        Hooks::At(HookPoint::kScanStep);
        auto [next, ok] = node->bundle.template Dereference<Hooks>(ts);
        if (!ok) return {nullptr, false};
        if (next->key >= low) {
          found = next;
          break;
        }
        node = next;
      }
      list->NoteVisit(found, low, high, stats);
      if (found->key > high) return {nullptr, true};
      return {found, true};
    }

    auto
    Next(Node *node, Key low, Key high, Timestamp ts, ScanStats *stats) -> Node *
    {
      Hooks::At(HookPoint::kScanStep);
      auto [next, ok] = node->bundle.template Dereference<Hooks>(ts);
      if (!ok) {
        list->runtime_->missing_entries.Add();
        return nullptr;
      }
      list->NoteVisit(next, low, high, stats);
      return next->key > high ? nullptr : next;
    }
  };

  void
  NoteVisit(Node *node, Key low, Key high, ScanStats *stats)
  {
    if constexpr (Hooks::kEnabled) {
      if (node->poisoned.load(std::memory_order_relaxed)) runtime_->poisoned_visits.Add();
    }
    if (stats == nullptr) return;
    ++stats->total_visits;
    if (node->key >= low && node->key <= high) ++stats->in_range_visits;
  }

  /// (pred, curr) with pred->key < key <= curr->key along newest links.
  auto
  Locate(Key key) const -> std::pair<Node *, Node *>
  {
    auto *pred = head_;
    auto *curr = pred->next.load(std::memory_order_acquire);
    while (curr->key < key) {
      pred = curr;
      curr = curr->next.load(std::memory_order_acquire);
    }
    return {pred, curr};
  }

  /// Node with `key` reachable through newest links or any bundle entry.
  auto
  FindAnywhere(Key key) const -> Node *
  {
    std::vector<Node *> stack{head_};
    std::unordered_set<Node *> seen{head_};
    while (!stack.empty()) {
      auto *n = stack.back();
      stack.pop_back();
      if (n->key == key) return n;
      if (n == tail_) continue;
      auto visit = [&](Node *m) {
        if (m != nullptr && seen.insert(m).second) stack.push_back(m);
      };
      visit(n->next.load(std::memory_order_acquire));
      if constexpr (kBundled) {
        for (auto [ts, target] : n->bundle.Chain()) visit(target);
      }
    }
    return nullptr;
  }

  static auto
  Validate(Node *pred, Node *curr) -> bool
  {
    return !pred->deleted.load(std::memory_order_acquire) &&
           !curr->deleted.load(std::memory_order_acquire) &&
           pred->next.load(std::memory_order_acquire) == curr;
  }

  std::shared_ptr<Runtime> runtime_;
  Node *head_;
  Node *tail_;
};

}  // namespace bref
