#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <thread>
#include <vector>

#include "bref/bundle.hpp"
#include "bref/clock.hpp"
#include "bref/lazy_list.hpp"

namespace bref {
namespace {

struct FakeNode {
  Key key;
};

using Chain = std::vector<std::pair<Timestamp, Key>>;

auto
Keys(const Bundle<FakeNode> &bundle) -> Chain
{
  Chain out;
  for (auto [ts, node] : bundle.Chain()) out.emplace_back(ts, node->key);
  return out;
}

TEST(Clock, FreshClockReadsZero)
{
  GlobalClock clock;
  EXPECT_EQ(clock.Read(), 0U);
}

TEST(Clock, StampReturnsPostIncrementValue)
{
  GlobalClock clock;
  for (Timestamp k = 1; k <= 10; ++k) {
    EXPECT_EQ(clock.Stamp(), k);
    EXPECT_EQ(clock.Read(), k);
  }
}

TEST(Clock, RelaxedEveryFiveAdvancesTwentyTimesInHundredUpdates)
{
  GlobalClock clock{5};
  std::uint64_t advances = 0;
  for (int i = 0; i < 100; ++i) {
    const auto before = clock.Read();
    clock.Stamp();
    if (clock.Read() != before) ++advances;
  }
  EXPECT_EQ(advances, 20U);
  EXPECT_EQ(clock.Read(), 20U);
}

TEST(Clock, RelaxNeverKeepsInitialValue)
{
  GlobalClock clock{kRelaxNever};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(clock.Stamp(), 0U);
  EXPECT_EQ(clock.Read(), 0U);
}

TEST(Bundle, PrepareInstallsPendingHeadOverFinalizedEntry)
{
  FakeNode n10{10}, n30{30};
  Bundle<FakeNode> bundle;
  bundle.Init(&n30, 2);
  auto *entry = bundle.Prepare(&n10);
  EXPECT_EQ(bundle.Head(), entry);
  EXPECT_EQ(entry->ts.load(), kPendingTs);
  EXPECT_EQ(entry->target, &n10);
  auto *older = entry->next.load();
  ASSERT_NE(older, nullptr);
  EXPECT_EQ(older->ts.load(), 2U);
  EXPECT_EQ(older->target, &n30);
}

TEST(Bundle, PrepareOnInitialTailEntry)
{
  FakeNode tail{kMaxKey}, n20{20};
  Bundle<FakeNode> bundle;
  bundle.Init(&tail, 0);
  bundle.Prepare(&n20);
  const auto chain = bundle.Chain();
  ASSERT_EQ(chain.size(), 2U);
  EXPECT_EQ(chain[0], std::make_pair(kPendingTs, &n20));
  EXPECT_EQ(chain[1], std::make_pair(Timestamp{0}, &tail));
}

TEST(Bundle, FinalizeStampsPendingHead)
{
  FakeNode n10{10}, n20{20}, n30{30};
  Bundle<FakeNode> bundle;
  bundle.Prepare(&n10);
  bundle.Finalize(3);
  EXPECT_EQ(Keys(bundle), (Chain{{3, 10}}));

  Bundle<FakeNode> node10;
  node10.Init(&n20, 3);
  node10.Prepare(&n30);
  node10.Finalize(4);
  EXPECT_EQ(Keys(node10), (Chain{{4, 30}, {3, 20}}));
}

TEST(Bundle, DereferenceFindsNewestSatisfyingEntry)
{
  FakeNode n20{20}, n30{30};
  Bundle<FakeNode> bundle;
  bundle.Init(&n20, 3);
  bundle.Init(&n30, 4);

  EXPECT_EQ(bundle.Dereference(3), std::make_pair(&n20, true));
  EXPECT_EQ(bundle.Dereference(4), std::make_pair(&n30, true));
  EXPECT_EQ(bundle.Dereference(100), std::make_pair(&n30, true));
  EXPECT_FALSE(bundle.Dereference(2).second);
}

TEST(Bundle, DereferenceAfterFinalizeReturnsNewTarget)
{
  FakeNode a{1}, b{2};
  Bundle<FakeNode> bundle;
  bundle.Init(&a, 0);
  bundle.Prepare(&b);
  bundle.Finalize(7);
  EXPECT_EQ(bundle.Dereference(7).first, &b);
  EXPECT_EQ(bundle.Dereference(6).first, &a);
}

TEST(Bundle, DereferenceWaitsForPendingHead)
{
  FakeNode a{1}, b{2};
  Bundle<FakeNode> bundle;
  bundle.Init(&a, 0);
  bundle.Prepare(&b);

  std::atomic<bool> done{false};
  FakeNode *seen = nullptr;
  std::thread reader{[&] {
    seen = bundle.Dereference(kPendingTs - 1).first;
    done.store(true);
  }};
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  EXPECT_FALSE(done.load());
  bundle.Finalize(1);
  reader.join();
  EXPECT_EQ(seen, &b);
}

TEST(Bundle, PruneKeepsNewestSatisfier)
{
  FakeNode n20{20}, n30{30};
  Bundle<FakeNode> bundle;
  bundle.Init(&n20, 3);
  bundle.Init(&n30, 4);

  std::size_t retired = 0;
  auto retire = [&](BundleEntry<FakeNode> *chain) {
    for (auto *e = chain; e != nullptr; e = e->next.load()) ++retired;
    DeleteChain(chain);
  };
  EXPECT_FALSE(bundle.Prunable(3));
  EXPECT_TRUE(bundle.Prunable(4));
  EXPECT_EQ(bundle.Prune(3, retire), 0U);
  EXPECT_EQ(bundle.Dereference(3).first, &n20);
  EXPECT_EQ(bundle.Prune(4, retire), 1U);
  EXPECT_EQ(retired, 1U);
  EXPECT_FALSE(bundle.Prunable(4));
  EXPECT_EQ(Keys(bundle), (Chain{{4, 30}}));
}

TEST(Bundle, CheckRejectsUnorderedAndPendingChains)
{
  FakeNode a{1}, b{2};
  Bundle<FakeNode> ordered;
  ordered.Init(&a, 1);
  ordered.Init(&b, 2);
  EXPECT_TRUE(ordered.Check(true).ok);

  Bundle<FakeNode> reversed;
  reversed.Init(&a, 2);
  reversed.Init(&b, 1);
  EXPECT_FALSE(reversed.Check(true).ok);

  Bundle<FakeNode> equal;
  equal.Init(&a, 2);
  equal.Init(&b, 2);
  EXPECT_FALSE(equal.Check(true).ok);
  EXPECT_TRUE(equal.Check(false).ok);

  Bundle<FakeNode> pending;
  pending.Init(&a, 1);
  pending.Prepare(&b);
  EXPECT_FALSE(pending.Check(true).ok);
  pending.Finalize(2);
}

TEST(Bundle, ConcurrentPreparesStayOrdered)
{
  constexpr int kThreads = 4;
  constexpr int kPerThread = 500;
  FakeNode target{1};
  Bundle<FakeNode> bundle;
  bundle.Init(&target, 0);
  GlobalClock clock;

  std::vector<std::thread> workers;
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&] {
      for (int i = 0; i < kPerThread; ++i) {
        bundle.Prepare(&target);
        bundle.Finalize(clock.Stamp());
      }
    });
  }
  for (auto &w : workers) w.join();

  const auto check = bundle.Check(true);
  EXPECT_TRUE(check.ok) << check.problem;
  EXPECT_EQ(check.length, static_cast<std::size_t>(kThreads * kPerThread + 1));
}

TEST(LinearizeUpdate, DisjointUpdatesGetDistinctTimestamps)
{
  constexpr int kThreads = 4;
  constexpr Key kPerThread = 400;
  LazyList<> list;
  std::vector<std::vector<Timestamp>> seen(kThreads);
  std::vector<std::thread> workers;
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&, t] {
      for (Key i = 1; i <= kPerThread; ++i) {
        ASSERT_TRUE(list.Insert(t * 1000 + i, i));
      }
    });
  }
  for (auto &w : workers) w.join();
  EXPECT_EQ(list.GetRuntime().Clock().Read(), kThreads * kPerThread);

  std::set<Timestamp> stamps;
  std::size_t entries = 0;
  for (Key key = 0; key < kThreads * 1000 + kPerThread + 1; ++key) {
    for (auto [ts, target] : list.BundleChain(key)) {
      stamps.insert(ts);
      ++entries;
    }
  }
  EXPECT_EQ(entries, 2 * kThreads * kPerThread + 1);
  EXPECT_EQ(stamps.size(), kThreads * kPerThread + 1);
}

}  // namespace
}  // namespace bref
