#pragma once

#include <array>
#include <atomic>
#include <cstdint>
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

/// Unbalanced internal BST in the style of Citrus with both child links
/// bundled.
///
/// The root is a sentinel holding kMaxKey; the tree hangs off its left child.
/// Searches run inside read sections. Removing a node with two children copies
/// its successor into its place, waits for in-flight searches, then unlinks
/// the original successor.
template <Variant V = Variant::kBundled, class Hooks = NoHooks>
class CitrusTree
{
 public:
  static constexpr bool kBundled = V == Variant::kBundled;
  static constexpr int kLeft = 0;
  static constexpr int kRight = 1;

  struct Node {
    Node(Key k, Value v, Node *left = nullptr, Node *right = nullptr) : key{k}, value{v}
    {
      child[kLeft].store(left, std::memory_order_relaxed);
      child[kRight].store(right, std::memory_order_relaxed);
    }

    void
    Poison() noexcept
    {
      poisoned.store(true, std::memory_order_relaxed);
    }

    const Key key;
    const Value value;
    Latch latch;
    std::atomic<bool> deleted{false};
    std::array<std::atomic<std::uint32_t>, 2> tag{};
    std::array<std::atomic<Node *>, 2> child;
    std::array<Bundle<Node>, 2> bundle;
    std::atomic<bool> poisoned{false};
  };

  explicit CitrusTree(std::shared_ptr<Runtime> runtime = std::make_shared<Runtime>())
      : runtime_{std::move(runtime)}
  {
    root_ = new Node{kMaxKey, 0};
    if constexpr (kBundled) {
      root_->bundle[kLeft].Init(nullptr, 0);
      root_->bundle[kRight].Init(nullptr, 0);
    }
  }

  CitrusTree(const CitrusTree &) = delete;
  auto operator=(const CitrusTree &) -> CitrusTree & = delete;

  ~CitrusTree()
  {
    std::vector<Node *> stack{root_};
    while (!stack.empty()) {
      auto *n = stack.back();
      stack.pop_back();
      for (auto &c : n->child) {
        if (auto *p = c.load(std::memory_order_relaxed)) stack.push_back(p);
      }
      delete n;
    }
  }

  auto
  Contains(Key key) -> bool
  {
    EpochGuard guard{runtime_->Epochs()};
    return Find(key).curr != nullptr;
  }

  auto
  Insert(Key key, Value value) -> bool
  {
    EpochGuard guard{runtime_->Epochs()};
    while (true) {
      auto [pred, dir, curr, tag] = Find(key);
      if (curr != nullptr) return false;

      std::unique_lock lock{pred->latch};
      if (pred->deleted.load(std::memory_order_acquire) ||
          pred->child[dir].load(std::memory_order_acquire) != nullptr ||
          pred->tag[dir].load(std::memory_order_acquire) != tag) {
        continue;
      }

      Hooks::At(HookPoint::kBeforeUpdate);
      auto *node = new Node{key, value};
      if constexpr (kBundled) {
        UpdatePlan<Node, Node *> plan{&pred->child[dir], node};
        plan.Add(&pred->bundle[dir], node);
        plan.Add(&node->bundle[kLeft], nullptr);
        plan.Add(&node->bundle[kRight], nullptr);
        LinearizeUpdate<Hooks>(plan, runtime_->Clock(), &runtime_->entries_created);
      } else {
        pred->child[dir].store(node, std::memory_order_seq_cst);
      }
      pred->tag[dir].fetch_add(1, std::memory_order_release);
      return true;
    }
  }

  auto
  Remove(Key key) -> bool
  {
    EpochGuard guard{runtime_->Epochs()};
    while (true) {
      auto [pred, dir, curr, tag] = Find(key);
      if (curr == nullptr) return false;

      std::unique_lock pred_lock{pred->latch};
      std::unique_lock curr_lock{curr->latch};
      if (pred->deleted.load(std::memory_order_acquire) ||
          curr->deleted.load(std::memory_order_acquire) ||
          pred->child[dir].load(std::memory_order_acquire) != curr) {
        continue;
      }

      auto *left = curr->child[kLeft].load(std::memory_order_acquire);
      auto *right = curr->child[kRight].load(std::memory_order_acquire);
      if (left == nullptr || right == nullptr) {
        Hooks::At(HookPoint::kBeforeUpdate);
        auto *only = left != nullptr ? left : right;
        curr->deleted.store(true, std::memory_order_release);
        Unlink(pred, dir, only);
        curr_lock.unlock();
        pred_lock.unlock();
        runtime_->Epochs().Retire(curr);
        return true;
      }

      auto *s_parent = curr;
      auto *s = right;
      for (auto *l = s->child[kLeft].load(std::memory_order_acquire); l != nullptr;
           l = s->child[kLeft].load(std::memory_order_acquire)) {
        s_parent = s;
        s = l;
      }
      std::unique_lock<Latch> s_parent_lock;
      if (s_parent != curr) s_parent_lock = std::unique_lock{s_parent->latch};
      std::unique_lock s_lock{s->latch};
      const bool s_valid =
          !s->deleted.load(std::memory_order_acquire) &&
          s->child[kLeft].load(std::memory_order_acquire) == nullptr &&
          (s_parent == curr ? curr->child[kRight].load(std::memory_order_acquire) == s
                            : !s_parent->deleted.load(std::memory_order_acquire) &&
                                  s_parent->child[kLeft].load(std::memory_order_acquire) == s);
      if (!s_valid) continue;

      Hooks::At(HookPoint::kBeforeUpdate);
      auto *s_right = s->child[kRight].load(std::memory_order_acquire);
      auto *copy = new Node{s->key, s->value, left, s_parent == curr ? s_right : right};
      std::lock_guard copy_lock{copy->latch};
      curr->deleted.store(true, std::memory_order_release);
      s->deleted.store(true, std::memory_order_release);
      LinkCopy(pred, dir, copy, s_parent != curr ? s_parent : nullptr, s_right);

      Hooks::At(HookPoint::kBeforeSynchronize);
      runtime_->Epochs().Synchronize();
      if (s_parent != curr) {
        s_parent->child[kLeft].store(s_right, std::memory_order_release);
        s_parent->tag[kLeft].fetch_add(1, std::memory_order_release);
      }
      s_lock.unlock();
      if (s_parent_lock.owns_lock()) s_parent_lock.unlock();
      curr_lock.unlock();
      pred_lock.unlock();
      runtime_->Epochs().Retire(curr);
      runtime_->Epochs().Retire(s);
      return true;
    }
  }

  /// Snapshot of [low, high] (inclusive) in DFS order.
  auto
  RangeQuery(Key low, Key high, ScanStats *stats = nullptr) -> std::vector<KeyValue>
  {
    std::vector<KeyValue> out;
    EpochGuard guard{runtime_->Epochs()};
    if constexpr (!kBundled) {
      std::vector<Node *> stack;
      if (auto *n = root_->child[kLeft].load(std::memory_order_acquire)) stack.push_back(n);
      while (!stack.empty()) {
        auto *n = stack.back();
        stack.pop_back();
        const bool in_range = n->key >= low && n->key <= high;
        if (in_range && !n->deleted.load(std::memory_order_acquire)) out.push_back({n->key, n->value});
        if (n->key > low) {
          if (auto *c = n->child[kLeft].load(std::memory_order_acquire)) stack.push_back(c);
        }
        if (n->key < high) {
          if (auto *c = n->child[kRight].load(std::memory_order_acquire)) stack.push_back(c);
        }
      }
      return out;
    } else {
      Scan scan{this, {}};
      RunRangeQuery<Hooks, Node>(
          low, high, scan, [this] { return runtime_->BeginRangeQuery(); },
          [&out](Node *n) { out.push_back({n->key, n->value}); }, stats);
      runtime_->EndRangeQuery();
      return out;
    }
  }

  auto
  RangeQueryAt(Key low, Key high, Timestamp ts, ScanStats *stats = nullptr)
      -> std::vector<KeyValue>
    requires kBundled
  {
    std::vector<KeyValue> out;
    EpochGuard guard{runtime_->Epochs()};
    Scan scan{this, {}};
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
      std::vector<Node *> stack{root_};
      std::size_t visited = 0;
      while (!stack.empty()) {
        auto *n = stack.back();
        stack.pop_back();
        PruneStep(visited);
        for (int d = kLeft; d <= kRight; ++d) {
          if (auto *c = n->child[d].load(std::memory_order_acquire)) stack.push_back(c);
        }
        if (!n->bundle[kLeft].Prunable(min_active) && !n->bundle[kRight].Prunable(min_active)) {
          continue;
        }
        std::lock_guard lock{n->latch};
        for (int d = kLeft; d <= kRight; ++d) {
          recycled += n->bundle[d].Prune(min_active, [this](BundleEntry<Node> *chain) {
            runtime_->Epochs().template RetireWith<BundleEntry<Node>, &DeleteChain<Node>>(chain);
          });
        }
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
    struct Frame {
      const Node *node;
      Key lo;  // exclusive bounds
      Key hi;
    };
    std::vector<Frame> stack{{root_, kMinKey, kMaxKey}};
    bool is_root = true;
    while (!stack.empty()) {
      auto [n, lo, hi] = stack.back();
      stack.pop_back();
      if (!is_root) {
        ++report.nodes;
        if (n->key <= lo || n->key >= hi) report.Fail("order violated at " + std::to_string(n->key));
        if (n->deleted.load()) report.Fail("deleted node reachable: " + std::to_string(n->key));
      }
      for (int d = kLeft; d <= kRight; ++d) {
        auto *c = n->child[d].load(std::memory_order_acquire);
        if constexpr (kBundled) {
          report.Account(n->bundle[d].Check(strict, true, c),
                         "node " + std::to_string(n->key) + (d == kLeft ? " left" : " right"));
        }
        if (c == nullptr) continue;
        if (is_root && d == kRight) {
          report.Fail("root sentinel has a right child");
          continue;
        }
        stack.push_back(d == kLeft ? Frame{c, lo, n->key} : Frame{c, n->key, hi});
      }
      is_root = false;
    }
    return report;
  }

  /// (ts, target key) pairs of one child bundle of the node holding `key`
  /// (kMaxKey = root sentinel), including nodes only reachable through bundle
  /// history; when several nodes hold the key (successor copies) the one
  /// reachable through newest links wins. A nil target is reported as kMinKey.
  auto
  BundleChain(Key key, int dir) const -> std::vector<std::pair<Timestamp, Key>>
    requires kBundled
  {
    std::vector<std::pair<Timestamp, Key>> out;
    const Node *n = root_;
    while (n != nullptr && n->key != key) {
      n = n->child[key < n->key ? kLeft : kRight].load(std::memory_order_acquire);
    }
    if (n == nullptr) n = FindInHistory(key);
    if (n == nullptr) return out;
    for (auto [ts, target] : n->bundle[dir].Chain()) {
      out.emplace_back(ts, target == nullptr ? kMinKey : target->key);
    }
    return out;
  }

  /// In-order contents via newest links. Quiescent use only.
  auto
  Items() const -> std::vector<KeyValue>
  {
    std::vector<KeyValue> out;
    std::vector<const Node *> stack;
    const Node *n = root_->child[kLeft].load();
    while (n != nullptr || !stack.empty()) {
      while (n != nullptr) {
        stack.push_back(n);
        n = n->child[kLeft].load();
      }
      n = stack.back();
      stack.pop_back();
      out.push_back({n->key, n->value});
      n = n->child[kRight].load();
    }
    return out;
  }

  auto Size() const -> std::size_t { return Items().size(); }
  auto GetRuntime() -> Runtime & { return *runtime_; }

 private:
  auto
  FindInHistory(Key key) const -> const Node *
  {
    std::vector<const Node *> stack{root_};
    std::unordered_set<const Node *> seen{root_};
    while (!stack.empty()) {
      const auto *n = stack.back();
      stack.pop_back();
      if (n->key == key) return n;
      auto visit = [&](const Node *m) {
        if (m != nullptr && seen.insert(m).second) stack.push_back(m);
      };
      for (int d = kLeft; d <= kRight; ++d) {
        visit(n->child[d].load(std::memory_order_acquire));
        for (auto [ts, target] : n->bundle[d].Chain()) visit(target);
      }
    }
    return nullptr;
  }

  struct Location {
    Node *pred;
    int dir;
    Node *curr;  // nullptr if the key is absent
    std::uint32_t tag;  // pred->tag[dir] read before pred->child[dir]
  };

  auto
  Find(Key key) -> Location
  {
    ReadSection section{runtime_->Epochs()};
    Location loc{root_, kLeft, nullptr, 0};
    loc.tag = root_->tag[kLeft].load(std::memory_order_acquire);
    loc.curr = root_->child[kLeft].load(std::memory_order_acquire);
    while (loc.curr != nullptr && loc.curr->key != key) {
      loc.pred = loc.curr;
      loc.dir = key < loc.curr->key ? kLeft : kRight;
      loc.tag = loc.pred->tag[loc.dir].load(std::memory_order_acquire);
      loc.curr = loc.pred->child[loc.dir].load(std::memory_order_acquire);
    }
    return loc;
  }

  /// Linearizes removal of a node with at most one child.
  void
  Unlink(Node *pred, int dir, Node *only_child)
  {
    if constexpr (kBundled) {
      UpdatePlan<Node, Node *> plan{&pred->child[dir], only_child};
      plan.Add(&pred->bundle[dir], only_child);
      LinearizeUpdate<Hooks>(plan, runtime_->Clock(), &runtime_->entries_created);
    } else {
      pred->child[dir].store(only_child, std::memory_order_seq_cst);
    }
    pred->tag[dir].fetch_add(1, std::memory_order_release);
  }

  /// Linearizes a two-child removal by linking the successor copy in place of
  /// the removed node. A non-null s_parent records s_right as its left child.
  void
  LinkCopy(Node *pred, int dir, Node *copy, Node *s_parent, Node *s_right)
  {
    if constexpr (kBundled) {
      UpdatePlan<Node, Node *> plan{&pred->child[dir], copy};
      plan.Add(&pred->bundle[dir], copy);
      plan.Add(&copy->bundle[kLeft], copy->child[kLeft].load(std::memory_order_relaxed));
      plan.Add(&copy->bundle[kRight], copy->child[kRight].load(std::memory_order_relaxed));
      if (s_parent != nullptr) plan.Add(&s_parent->bundle[kLeft], s_right);
      LinearizeUpdate<Hooks>(plan, runtime_->Clock(), &runtime_->entries_created);
    } else {
      pred->child[dir].store(copy, std::memory_order_seq_cst);
    }
    pred->tag[dir].fetch_add(1, std::memory_order_release);
  }

  struct Scan {
    CitrusTree *tree;
    std::vector<Node *> stack;

    /// Descends through bundles at ts from the root sentinel to the first
    /// node inside the range, which roots every snapshot key in the range.
    /// Newest links cannot be used here: a removed ancestor or a moved
    /// successor can make the newest path cover a different key interval
    /// than the snapshot path.
    auto
    First(Key low, Key high, Timestamp ts, ScanStats *stats) -> std::pair<Node *, bool>
    {
      stack.clear();
      Node *parent = tree->root_;
      int dir = kLeft;
      while (true) {
        Hooks::At(HookPoint::kScanStep);
        auto [c, ok] = parent->bundle[dir].template Dereference<Hooks>(ts);
        if (!ok) return {nullptr, false};
        if (c == nullptr) return {nullptr, true};
        if (c->key >= low && c->key <= high) {
          tree->NoteVisit(c, low, high, stats);
          return {c, true};
        }
        parent = c;
        dir = high < c->key ? kLeft : kRight;
      }
    }

    auto
    Next(Node *node, Key low, Key high, Timestamp ts, ScanStats *stats) -> Node *
    {
      PushChildren(node, low, high, ts);
      while (!stack.empty()) {
        auto *n = stack.back();
        stack.pop_back();
        tree->NoteVisit(n, low, high, stats);
        if (n->key >= low && n->key <= high) return n;
        PushChildren(n, low, high, ts);
      }
      return nullptr;
    }

    void
    PushChildren(Node *node, Key low, Key high, Timestamp ts)
    {
      if (node->key >= low) Push(node, kLeft, ts);
      if (node->key <= high) Push(node, kRight, ts);
    }

    void
    Push(Node *node, int dir, Timestamp ts)
    {
      Hooks::At(HookPoint::kScanStep);
      auto [c, ok] = node->bundle[dir].template Dereference<Hooks>(ts);
      if (!ok) {
        tree->runtime_->missing_entries.Add();
        return;
      }
      if (c != nullptr) stack.push_back(c);
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

  std::shared_ptr<Runtime> runtime_;
  Node *root_;
};

}  // namespace bref
