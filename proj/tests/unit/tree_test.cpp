#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <map>
#include <random>
#include <thread>
#include <vector>

#include "bref/citrus_tree.hpp"
#include "test_support.hpp"

namespace bref {
namespace {

using Chain = std::vector<std::pair<Timestamp, Key>>;
using Tree = CitrusTree<>;
using testing::Pause;
constexpr int kL = Tree::kLeft;
constexpr int kR = Tree::kRight;
constexpr Key kNil = kMinKey;

auto
Sorted(std::vector<KeyValue> items) -> std::vector<Key>
{
  std::vector<Key> out;
  for (const auto &kv : items) out.push_back(kv.key);
  std::sort(out.begin(), out.end());
  return out;
}

void
Fill(Tree &tree, std::initializer_list<Key> keys)
{
  for (Key k : keys) ASSERT_TRUE(tree.Insert(k, k));
}

TEST(CitrusTree, InsertUnderRootSentinel)
{
  Tree tree;
  EXPECT_TRUE(tree.Insert(50, 50));
  EXPECT_FALSE(tree.Insert(50, 51));
  EXPECT_EQ(tree.BundleChain(kMaxKey, kL), (Chain{{1, 50}, {0, kNil}}));
  EXPECT_EQ(tree.BundleChain(50, kL), (Chain{{1, kNil}}));
  EXPECT_EQ(tree.BundleChain(50, kR), (Chain{{1, kNil}}));
}

TEST(CitrusTree, Contains)
{
  Tree tree;
  Fill(tree, {50, 25, 75});
  EXPECT_TRUE(tree.Contains(25));
  EXPECT_FALSE(tree.Contains(26));
}

TEST(CitrusTree, RemoveLeaf)
{
  Tree tree;
  Fill(tree, {50, 25});
  EXPECT_TRUE(tree.Remove(25));
  EXPECT_FALSE(tree.Remove(25));
  EXPECT_EQ(tree.BundleChain(50, kL), (Chain{{3, kNil}, {2, 25}, {1, kNil}}));
}

TEST(CitrusTree, RemoveWithOneChild)
{
  Tree tree;
  Fill(tree, {50, 25, 10});
  EXPECT_TRUE(tree.Remove(25));
  EXPECT_EQ(tree.BundleChain(50, kL), (Chain{{4, 10}, {2, 25}, {1, kNil}}));
  EXPECT_EQ(Sorted(tree.RangeQueryAt(1, 100, 3)), (std::vector<Key>{10, 25, 50}));
  EXPECT_EQ(Sorted(tree.RangeQuery(1, 100)), (std::vector<Key>{10, 50}));
}

TEST(CitrusTree, RemoveWithTwoChildrenDeepSuccessor)
{
  Tree tree;
  Fill(tree, {50, 25, 75, 60});
  EXPECT_TRUE(tree.Remove(50));
  EXPECT_EQ(tree.BundleChain(kMaxKey, kL), (Chain{{5, 60}, {1, 50}, {0, kNil}}));
  EXPECT_EQ(tree.BundleChain(60, kL), (Chain{{5, 25}}));
  EXPECT_EQ(tree.BundleChain(60, kR), (Chain{{5, 75}}));
  EXPECT_EQ(tree.BundleChain(75, kL), (Chain{{5, kNil}, {4, 60}, {3, kNil}}));
  EXPECT_TRUE(tree.CheckInvariants().ok);
  EXPECT_EQ(Sorted(tree.RangeQueryAt(1, 100, 4)), (std::vector<Key>{25, 50, 60, 75}));
  EXPECT_EQ(Sorted(tree.RangeQuery(1, 100)), (std::vector<Key>{25, 60, 75}));
}

TEST(CitrusTree, RemoveWithTwoChildrenAdjacentSuccessor)
{
  Tree tree;
  Fill(tree, {50, 25, 75, 80});
  EXPECT_TRUE(tree.Remove(50));
  EXPECT_EQ(tree.BundleChain(75, kL), (Chain{{5, 25}}));
  EXPECT_EQ(tree.BundleChain(75, kR), (Chain{{5, 80}}));
  EXPECT_TRUE(tree.CheckInvariants().ok);
  EXPECT_EQ(Sorted(tree.RangeQuery(1, 100)), (std::vector<Key>{25, 75, 80}));
}

TEST(CitrusTree, RangeQueryExamples)
{
  Tree tree;
  Fill(tree, {50, 25, 75});
  EXPECT_EQ(Sorted(tree.RangeQuery(20, 30)), (std::vector<Key>{25}));
  EXPECT_EQ(Sorted(tree.RangeQuery(10, 90)), (std::vector<Key>{25, 50, 75}));
  EXPECT_EQ(Sorted(tree.RangeQuery(20, 80)), (std::vector<Key>{25, 50, 75}));
  EXPECT_TRUE(tree.RangeQuery(60, 60).empty());
  Tree empty;
  EXPECT_TRUE(empty.RangeQuery(1, 100).empty());
}

// Every removal order of {50, 25, 75, 60}; after each step all snapshots so
// far are compared with the oracle state recorded at that timestamp.
TEST(CitrusTree, AllRemovalOrdersMatchOracleAtEveryTimestamp)
{
  const std::array<Key, 4> inserts{50, 25, 75, 60};
  const std::vector<Key> bounds{1, 20, 25, 26, 50, 55, 60, 70, 75, 80, 100};
  std::array<Key, 4> order = inserts;
  std::sort(order.begin(), order.end());
  do {
    Tree tree;
    std::vector<std::vector<Key>> states{{}};
    std::vector<Key> current;
    for (Key k : inserts) {
      tree.Insert(k, k);
      current.push_back(k);
      std::sort(current.begin(), current.end());
      states.push_back(current);
    }
    for (Key k : order) {
      ASSERT_TRUE(tree.Remove(k));
      current.erase(std::find(current.begin(), current.end(), k));
      states.push_back(current);
      ASSERT_TRUE(tree.CheckInvariants().ok);
      for (Timestamp ts = 0; ts < states.size(); ++ts) {
        for (Key low : bounds) {
          for (Key high : bounds) {
            if (high < low) continue;
            std::vector<Key> expected;
            for (Key x : states[ts]) {
              if (x >= low && x <= high) expected.push_back(x);
            }
            ASSERT_EQ(Sorted(tree.RangeQueryAt(low, high, ts)), expected)
                << "ts=" << ts << " [" << low << "," << high << "] after removing " << k;
          }
        }
      }
    }
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST(CitrusTree, ConcurrentReadersDuringSuccessorReplacement)
{
  test_hooks::ScopedReset reset;
  CitrusTree<Variant::kBundled, TestHooks> tree;
  for (Key k : {50, 25, 75, 60}) tree.Insert(k, k);

  Pause pause{HookPoint::kBeforeSynchronize};
  std::thread remover{[&] {
    Pause::Role() = true;
    EXPECT_TRUE(tree.Remove(50));
  }};
  ASSERT_TRUE(pause.AwaitReached());
  EXPECT_TRUE(tree.Contains(25));
  EXPECT_TRUE(tree.Contains(60));
  EXPECT_TRUE(tree.Contains(75));
  EXPECT_EQ(Sorted(tree.RangeQuery(1, 100)), (std::vector<Key>{25, 60, 75}));
  EXPECT_EQ(Sorted(tree.RangeQueryAt(1, 100, 4)), (std::vector<Key>{25, 50, 60, 75}));
  pause.Release();
  remover.join();
  EXPECT_TRUE(tree.CheckInvariants().ok);
}

TEST(CitrusTree, StressKeepsInvariants)
{
  constexpr int kThreads = 4;
  Tree tree;
  std::atomic<std::int64_t> net{0};
  std::vector<std::thread> workers;
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&, t] {
      std::mt19937_64 rng(t + 200);
      for (int i = 0; i < 20000; ++i) {
        const Key key = 1 + rng() % 256;
        switch (rng() % 4) {
          case 0:
            if (tree.Insert(key, key)) net.fetch_add(1);
            break;
          case 1:
            if (tree.Remove(key)) net.fetch_sub(1);
            break;
          case 2:
            tree.Contains(key);
            break;
          default:
            tree.RangeQuery(key, key + 32);
        }
      }
    });
  }
  for (auto &w : workers) w.join();
  const auto report = tree.CheckInvariants();
  EXPECT_TRUE(report.ok) << (report.problems.empty() ? "" : report.problems.front());
  const auto items = tree.Items();
  EXPECT_EQ(static_cast<std::int64_t>(items.size()), net.load());
  EXPECT_EQ(tree.GetRuntime().missing_entries.Sum(), 0U);
  auto rq = tree.RangeQuery(1, 256);
  std::sort(rq.begin(), rq.end());
  EXPECT_EQ(rq, items);
}

TEST(CitrusTree, MinimalityInQuiescence)
{
  Tree tree;
  std::mt19937_64 rng{8};
  for (int i = 0; i < 500; ++i) tree.Insert(1 + rng() % 1000, 1);
  for (int i = 0; i < 100; ++i) {
    const Key low = 1 + rng() % 1000;
    const Key high = low + rng() % 100;
    ScanStats stats;
    const auto items = tree.RangeQuery(low, high, &stats);
    EXPECT_EQ(stats.in_range_visits, items.size());
  }
}

}  // namespace
}  // namespace bref
