#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
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

/// Lazy skip list whose data layer (level 0) links are bundled. Index layers
/// are plain links used only to accelerate traversals.
///
/// Inserts linearize when the new node's fullyLinked flag is set, removes at
/// the logical-deletion flag. A new node stays latched until its bundles are
/// finalized, so no other update can prepare its bundle before it does.
template <Variant V = Variant::kBundled, class Hooks = NoHooks>
class LazySkipList
{
 public:
  static constexpr bool kBundled = V == Variant::kBundled;
  static constexpr int kMaxLevel = 20;

  struct Node {
    Node(Key k, Value v, int top) : key{k}, value{v}, top_level{top}
    {
      for (auto &n : next) n.store(nullptr, std::memory_order_relaxed);
    }

    void
    Poison() noexcept
    {
      poisoned.store(true, std::memory_order_relaxed);
    }

    const Key key;
    const Value value;
    const int top_level;
    Latch latch;
    std::atomic<bool> deleted{false};
    std::atomic<bool> fully_linked{false};
    std::array<std::atomic<Node *>, kMaxLevel> next;
    Bundle<Node> bundle;  // backs next[0] only
    std::atomic<bool> poisoned{false};
  };

  explicit LazySkipList(std::shared_ptr<Runtime> runtime = std::make_shared<Runtime>())
      : runtime_{std::move(runtime)}
  {
    tail_ = new Node{kMaxKey, 0, kMaxLevel - 1};
    head_ = new Node{kMinKey, 0, kMaxLevel - 1};
    for (auto &n : head_->next) n.store(tail_, std::memory_order_relaxed);
    head_->fully_linked.store(true);
    tail_->fully_linked.store(true);
    if constexpr (kBundled) head_->bundle.Init(tail_, 0);
  }

  LazySkipList(const LazySkipList &) = delete;
  auto operator=(const LazySkipList &) -> LazySkipList & = delete;

  ~LazySkipList()
  {
    for (auto *n = head_; n != nullptr;) {
      auto *next = n->next[0].load(std::memory_order_relaxed);
      delete n;
      n = next;
    }
  }

  auto
  Contains(Key key) -> bool
  {
    EpochGuard guard{runtime_->Epochs()};
    Path preds;
    Path succs;
    const int found = Find(key, preds, succs);
    if (found < 0) return false;
    auto *node = succs[found];
    return node->fully_linked.load(std::memory_order_acquire) &&
           !node->deleted.load(std::memory_order_acquire);
  }

  auto
  Insert(Key key, Value value) -> bool
  {
    EpochGuard guard{runtime_->Epochs()};
    const int top = RandomLevel();
    Path preds;
    Path succs;
    while (true) {
      const int found = Find(key, preds, succs);
      if (found >= 0) {
        auto *node = succs[found];
        if (!node->deleted.load(std::memory_order_acquire)) {
          Backoff backoff;
          while (!node->fully_linked.load(std::memory_order_acquire)) backoff.Pause();
          return false;
        }
        std::this_thread::yield();
        continue;
      }

      LockSet locks;
      bool valid = true;
      for (int level = 0; valid && level <= top; ++level) {
        auto *pred = preds[level];
        auto *succ = succs[level];
        locks.Lock(pred);
        valid = !pred->deleted.load(std::memory_order_acquire) &&
                !succ->deleted.load(std::memory_order_acquire) &&
                pred->next[level].load(std::memory_order_acquire) == succ;
      }
      if (!valid) continue;

      Hooks::At(HookPoint::kBeforeUpdate);
      auto *node = new Node{key, value, top};
      std::lock_guard node_lock{node->latch};
      for (int level = 0; level <= top; ++level) {
        node->next[level].store(succs[level], std::memory_order_relaxed);
      }
      for (int level = 0; level <= top; ++level) {
        preds[level]->next[level].store(node, std::memory_order_release);
      }
      if constexpr (kBundled) {
        UpdatePlan<Node, bool> plan{&node->fully_linked, true};
        plan.Add(&node->bundle, succs[0]);
        plan.Add(&preds[0]->bundle, node);
        LinearizeUpdate<Hooks>(plan, runtime_->Clock(), &runtime_->entries_created);
      } else {
        node->fully_linked.store(true, std::memory_order_seq_cst);
      }
      return true;
    }
  }

  auto
  Remove(Key key) -> bool
  {
    EpochGuard guard{runtime_->Epochs()};
    Path preds;
    Path succs;
    while (true) {
      const int found = Find(key, preds, succs);
      if (found < 0) return false;
      auto *victim = succs[found];
      if (!victim->fully_linked.load(std::memory_order_acquire) || victim->top_level != found ||
          victim->deleted.load(std::memory_order_acquire)) {
        return false;
      }

      std::unique_lock victim_lock{victim->latch};
      if (victim->deleted.load(std::memory_order_acquire)) return false;

      const int top = victim->top_level;
      LockSet locks;
      bool valid = true;
      for (int level = 0; valid && level <= top; ++level) {
        auto *pred = preds[level];
        locks.Lock(pred);
        valid = !pred->deleted.load(std::memory_order_acquire) &&
                pred->next[level].load(std::memory_order_acquire) == victim;
      }
      if (!valid) continue;

      Hooks::At(HookPoint::kBeforeUpdate);
      if constexpr (kBundled) {
        UpdatePlan<Node, bool> plan{&victim->deleted, true};
        plan.Add(&preds[0]->bundle, victim->next[0].load(std::memory_order_acquire));
        LinearizeUpdate<Hooks>(plan, runtime_->Clock(), &runtime_->entries_created);
      } else {
        victim->deleted.store(true, std::memory_order_seq_cst);
      }
      for (int level = top; level >= 0; --level) {
        preds[level]->next[level].store(victim->next[level].load(std::memory_order_acquire),
                                        std::memory_order_release);
      }
      victim_lock.unlock();
      locks.UnlockAll();
      runtime_->Epochs().Retire(victim);
      return true;
    }
  }

  auto
  RangeQuery(Key low, Key high, ScanStats *stats = nullptr) -> std::vector<KeyValue>
  {
    std::vector<KeyValue> out;
    EpochGuard guard{runtime_->Epochs()};
    if constexpr (!kBundled) {
      auto *n = Descend(low, true)->next[0].load(std::memory_order_acquire);
      for (; n->key <= high; n = n->next[0].load(std::memory_order_acquire)) {
        if (n->fully_linked.load(std::memory_order_acquire) &&
            !n->deleted.load(std::memory_order_acquire)) {
          out.push_back({n->key, n->value});
        }
      }
      return out;
    } else {
      Scan scan{this, true};
      RunRangeQuery<Hooks, Node>(
          low, high, scan, [this] { return runtime_->BeginRangeQuery(); },
          [&out](Node *n) { out.push_back({n->key, n->value}); }, stats);
      runtime_->EndRangeQuery();
      return out;
    }
  }

  /// Range query at a caller-chosen timestamp; use_index = false enters the
  /// range by walking level 0 only. Replays and tests only.
  auto
  RangeQueryAt(Key low, Key high, Timestamp ts, ScanStats *stats = nullptr, bool use_index = true)
      -> std::vector<KeyValue>
    requires kBundled
  {
    std::vector<KeyValue> out;
    EpochGuard guard{runtime_->Epochs()};
    Scan scan{this, use_index};
    auto [node, valid] = scan.First(low, high, ts, stats);
    if (!valid) return out;
    for (; node != nullptr; node = scan.Next(node, low, high, ts, stats)) {
      out.push_back({node->key, node->value});
    }
    return out;
  }

  auto
  Prune() -> std::size_t
    requires kBundled
  {
    std::size_t recycled = 0;
    {
      EpochGuard guard{runtime_->Epochs()};
      const auto min_active = runtime_->MinActiveRangeQuery();
      std::size_t visited = 0;
      for (auto *n = head_; n != tail_; n = n->next[0].load(std::memory_order_acquire)) {
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

  auto
  CheckInvariants(bool strict = true) const -> InvariantReport
  {
    InvariantReport report;
    std::vector<Node *> data_layer;
    for (auto *n = head_; n != tail_;) {
      auto *next = n->next[0].load(std::memory_order_acquire);
      if (next == nullptr) {
        report.Fail("data layer does not reach tail");
        return report;
      }
      if (next->key <= n->key) report.Fail("keys not ascending at " + std::to_string(n->key));
      if (n != head_) {
        ++report.nodes;
        if (n->deleted.load()) report.Fail("deleted node reachable: " + std::to_string(n->key));
        if (!n->fully_linked.load()) report.Fail("node not fully linked: " + std::to_string(n->key));
      }
      if constexpr (kBundled) {
        report.Account(n->bundle.Check(strict, true, next), "node " + std::to_string(n->key));
      }
      data_layer.push_back(n);
      n = next;
    }
    // Every index level must be a sorted subsequence of the data layer.
    for (int level = 1; level < kMaxLevel; ++level) {
      std::size_t pos = 0;
      for (auto *n = head_->next[level].load(); n != tail_; n = n->next[level].load()) {
        if (n->top_level < level) report.Fail("node linked above its top level");
        while (pos < data_layer.size() && data_layer[pos] != n) ++pos;
        if (pos == data_layer.size()) {
          report.Fail("index level " + std::to_string(level) + " not a subsequence of data layer");
          break;
        }
      }
    }
    return report;
  }

  /// (ts, target key) pairs of the level-0 bundle of the node holding `key`
  /// (kMinKey = head), including nodes only reachable through bundle history.
  auto
  BundleChain(Key key) const -> std::vector<std::pair<Timestamp, Key>>
    requires kBundled
  {
    std::vector<Node *> stack{head_};
    std::unordered_set<Node *> seen{head_};
    while (!stack.empty()) {
      auto *n = stack.back();
      stack.pop_back();
      if (n == tail_) continue;
      const auto chain = n->bundle.Chain();
      if (n->key == key) {
        std::vector<std::pair<Timestamp, Key>> out;
        for (auto [ts, target] : chain) out.emplace_back(ts, target->key);
        return out;
      }
      auto visit = [&](Node *m) {
        if (m != nullptr && seen.insert(m).second) stack.push_back(m);
      };
      visit(n->next[0].load(std::memory_order_acquire));
      for (auto [ts, target] : chain) visit(target);
    }
    return {};
  }

  auto
  Items() const -> std::vector<KeyValue>
  {
    std::vector<KeyValue> out;
    for (auto *n = head_->next[0].load(); n != tail_; n = n->next[0].load()) {
      out.push_back({n->key, n->value});
    }
    return out;
  }

  auto Size() const -> std::size_t { return Items().size(); }
  auto GetRuntime() -> Runtime & { return *runtime_; }

 private:
  using Path = std::array<Node *, kMaxLevel>;

  /// Latches taken while linking or unlinking; skips repeated preds.
  class LockSet
  {
   public:
    LockSet() = default;
    LockSet(const LockSet &) = delete;
    auto operator=(const LockSet &) -> LockSet & = delete;
    ~LockSet() { UnlockAll(); }

    void
    Lock(Node *node)
    {
      if (count_ > 0 && held_[count_ - 1] == node) return;
      node->latch.lock();
      held_[count_++] = node;
    }

    void
    UnlockAll()
    {
      while (count_ > 0) held_[--count_]->latch.unlock();
    }

   private:
    std::array<Node *, kMaxLevel> held_{};
    int count_ = 0;
  };

  struct Scan {
    LazySkipList *list;
    bool use_index;

    auto
    First(Key low, Key high, Timestamp ts, ScanStats *stats) -> std::pair<Node *, bool>
    {
      auto *node = list->Descend(low, use_index);
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

  /// Last data-layer node with key < `key` along newest links.
  auto
  Descend(Key key, bool use_index) const -> Node *
  {
    auto *pred = head_;
    for (int level = use_index ? kMaxLevel - 1 : 0; level >= 0; --level) {
      auto *curr = pred->next[level].load(std::memory_order_acquire);
      while (curr->key < key) {
        pred = curr;
        curr = pred->next[level].load(std::memory_order_acquire);
      }
    }
    return pred;
  }

  /// Fills preds/succs at every level; returns the highest level holding
  /// `key`, or -1.
  auto
  Find(Key key, Path &preds, Path &succs) const -> int
  {
    int found = -1;
    auto *pred = head_;
    for (int level = kMaxLevel - 1; level >= 0; --level) {
      auto *curr = pred->next[level].load(std::memory_order_acquire);
      while (key > curr->key) {
        pred = curr;
        curr = pred->next[level].load(std::memory_order_acquire);
      }
      if (found < 0 && key == curr->key) found = level;
      preds[level] = pred;
      succs[level] = curr;
    }
    return found;
  }

  static auto
  RandomLevel() -> int
  {
    thread_local std::uint64_t state =
        0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(ThreadIndex()) + 1);
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    int level = 0;
    auto bits = state;
    while ((bits & 1U) != 0 && level < kMaxLevel - 1) {
      ++level;
      bits >>= 1;
    }
    return level;
  }

  std::shared_ptr<Runtime> runtime_;
  Node *head_;
  Node *tail_;
};

}  // namespace bref
