#include <gtest/gtest.h>

#include <atomic>
#include <map>
#include <random>
#include <thread>
#include <vector>

#include "bref/lazy_list.hpp"
#include "test_support.hpp"

namespace bref {
namespace {

using Chain = std::vector<std::pair<Timestamp, Key>>;
using testing::Pause;

auto
KeysOf(const std::vector<KeyValue> &items) -> std::vector<Key>
{
  std::vector<Key> out;
  for (const auto &kv : items) out.push_back(kv.key);
  return out;
}

void
BuildFourUpdateHistory(LazyList<> &list)
{
  ASSERT_TRUE(list.Insert(20, 20));
  ASSERT_TRUE(list.Insert(30, 30));
  ASSERT_TRUE(list.Insert(10, 10));
  ASSERT_TRUE(list.Remove(20));
}

TEST(LazyList, FourUpdateReplayChains)
{
  LazyList<> list;
  BuildFourUpdateHistory(list);
  EXPECT_EQ(list.GetRuntime().Clock().Read(), 4U);
  EXPECT_EQ(list.BundleChain(kMinKey), (Chain{{3, 10}, {1, 20}, {0, kMaxKey}}));
  EXPECT_EQ(list.BundleChain(10), (Chain{{4, 30}, {3, 20}}));
  EXPECT_EQ(list.BundleChain(20), (Chain{{2, 30}, {1, kMaxKey}}));
  EXPECT_EQ(list.BundleChain(30), (Chain{{2, kMaxKey}}));
}

TEST(LazyList, FourUpdateReplayRangeQueries)
{
  LazyList<> list;
  BuildFourUpdateHistory(list);
  const std::vector<std::vector<Key>> expected{{}, {20}, {20, 30}, {10, 20, 30}, {10, 30}};
  for (Timestamp ts = 0; ts <= 4; ++ts) {
    EXPECT_EQ(KeysOf(list.RangeQueryAt(10, 30, ts)), expected[ts]) << "ts=" << ts;
  }
  EXPECT_EQ(KeysOf(list.RangeQuery(10, 30)), (std::vector<Key>{10, 30}));
}

TEST(LazyList, FirstInRange)
{
  LazyList<> list;
  BuildFourUpdateHistory(list);
  EXPECT_EQ(list.FirstInRange(15, 35, 3), std::make_pair(Key{20}, true));
  EXPECT_EQ(list.FirstInRange(15, 35, 4), std::make_pair(Key{30}, true));
  EXPECT_EQ(list.FirstInRange(40, 50, 4), std::make_pair(kMaxKey, true));
}

TEST(LazyList, NextInRange)
{
  LazyList<> list;
  BuildFourUpdateHistory(list);
  EXPECT_EQ(list.NextInRange(10, 35, 4), 30U);
  EXPECT_EQ(list.NextInRange(10, 35, 3), 20U);
  EXPECT_EQ(list.NextInRange(30, 35, 4), kMaxKey);
}

TEST(LazyList, ContainsAfterFourUpdates)
{
  LazyList<> list;
  EXPECT_FALSE(list.Contains(5));
  BuildFourUpdateHistory(list);
  EXPECT_FALSE(list.Contains(20));
  EXPECT_TRUE(list.Contains(10));
  EXPECT_TRUE(list.Contains(30));
}

TEST(LazyList, SetSemantics)
{
  LazyList<> list;
  EXPECT_TRUE(list.Insert(20, 1));
  EXPECT_FALSE(list.Insert(20, 2));
  EXPECT_EQ(list.Items(), (std::vector<KeyValue>{{20, 1}}));
  EXPECT_TRUE(list.Remove(20));
  EXPECT_FALSE(list.Remove(20));
  EXPECT_EQ(list.BundleChain(kMinKey).size(), 3U);
}

TEST(LazyList, EmptyRangeQuery)
{
  LazyList<> list;
  EXPECT_TRUE(list.RangeQuery(1, 100).empty());
  LazyList<Variant::kUnsafe> unsafe;
  EXPECT_TRUE(unsafe.RangeQuery(1, 100).empty());
}

TEST(LazyList, UnsafeVariantMatchesOracle)
{
  LazyList<Variant::kUnsafe> list;
  std::map<Key, Value> oracle;
  std::mt19937_64 rng{3};
  for (int i = 0; i < 2000; ++i) {
    const Key key = 1 + rng() % 64;
    if (rng() % 2 == 0) {
      EXPECT_EQ(list.Insert(key, key), oracle.emplace(key, key).second);
    } else {
      EXPECT_EQ(list.Remove(key), oracle.erase(key) == 1);
    }
  }
  std::vector<KeyValue> expected;
  for (auto [k, v] : oracle) {
    if (k >= 10 && k <= 40) expected.push_back({k, v});
  }
  EXPECT_EQ(list.RangeQuery(10, 40), expected);
  EXPECT_TRUE(list.CheckInvariants().ok);
}

TEST(LazyList, InterleavedInsertsOnSamePredecessor)
{
  test_hooks::ScopedReset reset;
  LazyList<Variant::kBundled, TestHooks> list;
  Pause pause{HookPoint::kAfterPrepare};

  std::thread first{[&] {
    Pause::Role() = true;
    EXPECT_TRUE(list.Insert(15, 15));
  }};
  ASSERT_TRUE(pause.AwaitReached());
  std::atomic<bool> second_done{false};
  std::thread second{[&] {
    EXPECT_TRUE(list.Insert(10, 10));
    second_done.store(true);
  }};
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  EXPECT_FALSE(second_done.load());
  pause.Release();
  first.join();
  second.join();

  EXPECT_EQ(list.BundleChain(kMinKey), (Chain{{2, 10}, {1, 15}, {0, kMaxKey}}));
  EXPECT_EQ(list.BundleChain(10), (Chain{{2, 15}}));
  EXPECT_EQ(list.BundleChain(15), (Chain{{1, kMaxKey}}));
  const auto report = list.CheckInvariants();
  EXPECT_TRUE(report.ok);
}

TEST(LazyList, ConcurrentRemoveHasOneWinner)
{
  constexpr int kThreads = 4;
  constexpr Key kKeys = 200;
  for (int round = 0; round < 5; ++round) {
    LazyList<> list;
    for (Key k = 1; k <= kKeys; ++k) list.Insert(k, k);
    std::vector<std::vector<int>> wins(kThreads, std::vector<int>(kKeys + 1));
    std::vector<std::thread> workers;
    for (int t = 0; t < kThreads; ++t) {
      workers.emplace_back([&, t] {
        for (Key k = 1; k <= kKeys; ++k) wins[t][k] = list.Remove(k) ? 1 : 0;
      });
    }
    for (auto &w : workers) w.join();
    for (Key k = 1; k <= kKeys; ++k) {
      int total = 0;
      for (int t = 0; t < kThreads; ++t) total += wins[t][k];
      EXPECT_EQ(total, 1) << "key " << k;
    }
    EXPECT_TRUE(list.Items().empty());
  }
}

TEST(LazyList, StressKeepsInvariants)
{
  constexpr int kThreads = 4;
  LazyList<> list;
  std::atomic<std::int64_t> net{0};
  std::vector<std::thread> workers;
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&, t] {
      std::mt19937_64 rng(t + 1);
      for (int i = 0; i < 20000; ++i) {
        const Key key = 1 + rng() % 128;
        switch (rng() % 4) {
          case 0:
            if (list.Insert(key, key)) net.fetch_add(1);
            break;
          case 1:
            if (list.Remove(key)) net.fetch_sub(1);
            break;
          case 2:
            list.Contains(key);
            break;
          default: {
            const auto items = list.RangeQuery(key, key + 16);
            for (std::size_t j = 1; j < items.size(); ++j) {
              ASSERT_LT(items[j - 1].key, items[j].key);
            }
          }
        }
      }
    });
  }
  for (auto &w : workers) w.join();
  const auto report = list.CheckInvariants();
  EXPECT_TRUE(report.ok) << (report.problems.empty() ? "" : report.problems.front());
  EXPECT_EQ(static_cast<std::int64_t>(list.Size()), net.load());
  EXPECT_EQ(list.GetRuntime().missing_entries.Sum(), 0U);
  EXPECT_EQ(list.RangeQuery(1, 128), list.Items());
}

TEST(LazyList, SpaceBoundWithoutRemoves)
{
  constexpr std::uint64_t kN = 1000;
  LazyList<> list;
  std::mt19937_64 rng{11};
  std::uint64_t inserted = 0;
  while (inserted < kN) {
    if (list.Insert(1 + rng() % 100000, 1)) ++inserted;
  }
  EXPECT_EQ(list.GetRuntime().entries_created.Sum(), 2 * kN);
  EXPECT_EQ(list.CheckInvariants().entries, 2 * kN + 1);
}

TEST(LazyList, MinimalityInQuiescence)
{
  LazyList<> list;
  std::mt19937_64 rng{5};
  for (int i = 0; i < 500; ++i) list.Insert(1 + rng() % 1000, 1);
  for (int i = 0; i < 100; ++i) {
    const Key low = 1 + rng() % 1000;
    const Key high = low + rng() % 100;
    ScanStats stats;
    const auto items = list.RangeQuery(low, high, &stats);
    EXPECT_EQ(stats.in_range_visits, items.size());
    EXPECT_LE(stats.total_visits, items.size() + 1);
  }
}

}  // namespace
}  // namespace bref
