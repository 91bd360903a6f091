#include <gtest/gtest.h>

#include "bref/lincheck/checker.hpp"
#include "bref/lincheck/history.hpp"
#include "bref/lincheck/oracle.hpp"
#include "bref/lincheck/scenarios.hpp"

namespace bref::lincheck {
namespace {

auto
Op(unsigned thread, OpType op, Key key, bool ok, std::uint64_t invoke, std::uint64_t response)
    -> Event
{
  Event e;
  e.thread = thread;
  e.op = op;
  e.key = key;
  e.ok = ok;
  e.invoke = invoke;
  e.response = response;
  return e;
}

auto
Rq(unsigned thread, Key low, Key high, std::uint64_t mask, std::uint64_t invoke,
   std::uint64_t response) -> Event
{
  Event e = Op(thread, OpType::kRangeQuery, low, false, invoke, response);
  e.high = high;
  e.rq_mask = mask;
  return e;
}

TEST(Checker, SequentialHistoryIsLinearizable)
{
  History h{Op(0, OpType::kInsert, 3, true, 0, 1), Op(0, OpType::kInsert, 5, true, 2, 3),
            Op(0, OpType::kRemove, 3, true, 4, 5), Op(0, OpType::kContains, 3, false, 6, 7),
            Rq(0, 1, 10, 1ULL << 5, 8, 9)};
  EXPECT_EQ(CheckLinearizable(h).verdict, Verdict::kOk);
}

TEST(Checker, RangeQueryMissingCompletedInsertIsViolation)
{
  History h{Op(0, OpType::kInsert, 4, true, 0, 1), Rq(1, 1, 10, 0, 2, 3)};
  const auto result = CheckLinearizable(h);
  EXPECT_EQ(result.verdict, Verdict::kViolation);
  EXPECT_FALSE(result.counterexample.empty());
}

TEST(Checker, OverlappingOperationsMayReorder)
{
  History h{Op(0, OpType::kInsert, 4, true, 0, 3), Rq(1, 1, 10, 0, 1, 2)};
  EXPECT_EQ(CheckLinearizable(h).verdict, Verdict::kOk);
}

TEST(Checker, InitialSetIsRespected)
{
  History h{Op(0, OpType::kInsert, 2, false, 0, 1)};
  EXPECT_EQ(CheckLinearizable(h, 1ULL << 2).verdict, Verdict::kOk);
  EXPECT_EQ(CheckLinearizable(h, 0).verdict, Verdict::kViolation);
}

TEST(Checker, BudgetExhaustionIsReportedSeparately)
{
  History h;
  std::uint64_t t = 0;
  for (unsigned thread = 0; thread < 6; ++thread) {
    for (Key k = 1; k <= 4; ++k) h.push_back(Op(thread, OpType::kContains, k, false, t++, 1000));
  }
  h.push_back(Op(6, OpType::kContains, 1, true, 1001, 1002));
  const auto result = CheckLinearizable(h, 0, 50);
  EXPECT_EQ(result.verdict, Verdict::kBudgetExhausted);
  EXPECT_STREQ(VerdictName(result.verdict), VerdictName(Verdict::kBudgetExhausted));
}

TEST(Oracle, OrderedSetSemantics)
{
  SequentialOracle oracle;
  EXPECT_TRUE(oracle.Insert(5, 50));
  EXPECT_FALSE(oracle.Insert(5, 51));
  EXPECT_TRUE(oracle.Insert(9, 90));
  EXPECT_TRUE(oracle.Contains(5));
  EXPECT_EQ(oracle.RangeQuery(5, 9), (std::vector<KeyValue>{{5, 50}, {9, 90}}));
  EXPECT_TRUE(oracle.Remove(5));
  EXPECT_FALSE(oracle.Remove(5));
  EXPECT_TRUE(oracle.RangeQuery(1, 8).empty());
}

TEST(History, Masks)
{
  EXPECT_EQ(RangeMask(2, 4), 0b11100U);
  EXPECT_EQ(MaskOf({{1, 0}, {3, 0}}), 0b1010U);
}

TEST(RandomHistories, SmallBatchPassesForEveryStructure)
{
  for (auto s : {Structure::kList, Structure::kSkipList, Structure::kTree}) {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      const auto run = RunRandomHistory(s, seed);
      ASSERT_EQ(run.result.verdict, Verdict::kOk) << run.result.counterexample;
    }
  }
}

TEST(Scenarios, NeverLinearizedInsertIsInvisible)
{
  for (auto s : {Structure::kList, Structure::kSkipList, Structure::kTree}) {
    const auto outcome = NeverLinearizedScenario(s);
    EXPECT_TRUE(outcome.ok) << outcome.detail;
  }
}

TEST(Scenarios, NoConcurrencyReplayIsOrdered)
{
  for (auto s : {Structure::kList, Structure::kSkipList, Structure::kTree}) {
    const auto outcome = SequentialReplay(s, 16, 2, 60, 3);
    EXPECT_TRUE(outcome.ok) << outcome.detail;
  }
}

}  // namespace
}  // namespace bref::lincheck
