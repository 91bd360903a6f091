#include "bref/lincheck/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <random>
#include <sstream>
#include <thread>
#include <type_traits>
#include <vector>

#include "bref/citrus_tree.hpp"
#include "bref/hooks.hpp"
#include "bref/lazy_list.hpp"
#include "bref/lazy_skip_list.hpp"
#include "bref/lincheck/oracle.hpp"

namespace bref::lincheck {
namespace {

using TestList = LazyList<Variant::kBundled, TestHooks>;
using TestSkipList = LazySkipList<Variant::kBundled, TestHooks>;
using TestTree = CitrusTree<Variant::kBundled, TestHooks>;

template <class F>
auto
WithTestStructure(Structure s, F &&f)
{
  switch (s) {
    case Structure::kList: return f(std::type_identity<TestList>{});
    case Structure::kSkipList: return f(std::type_identity<TestSkipList>{});
    case Structure::kTree: break;
  }
  return f(std::type_identity<TestTree>{});
}

template <class F>
auto
WithStructure(Structure s, F &&f)
{
  switch (s) {
    case Structure::kList: return f(std::type_identity<LazyList<>>{});
    case Structure::kSkipList: return f(std::type_identity<LazySkipList<>>{});
    case Structure::kTree: break;
  }
  return f(std::type_identity<CitrusTree<>>{});
}

auto
Keys(const std::vector<KeyValue> &items) -> std::string
{
  std::vector<Key> keys;
  for (const auto &kv : items) keys.push_back(kv.key);
  std::sort(keys.begin(), keys.end());
  std::ostringstream out;
  out << '{';
  for (std::size_t i = 0; i < keys.size(); ++i) out << (i ? "," : "") << keys[i];
  out << '}';
  return out.str();
}

auto
HasKey(const std::vector<KeyValue> &items, Key key) -> bool
{
  return std::any_of(items.begin(), items.end(), [key](const KeyValue &kv) { return kv.key == key; });
}

/// Waits until `flag` is set or `limit` elapses; true if set.
auto
AwaitFlag(const std::atomic<bool> &flag, std::chrono::milliseconds limit) -> bool
{
  const auto deadline = std::chrono::steady_clock::now() + limit;
  while (!flag.load(std::memory_order_acquire)) {
    if (std::chrono::steady_clock::now() >= deadline) return false;
    std::this_thread::yield();
  }
  return true;
}

thread_local bool tl_paused_role = false;

/// Holds the thread marked as the paused role at one hook point until
/// released.
class PausePoint
{
 public:
  explicit PausePoint(HookPoint point) : point_{point}
  {
    test_hooks::SetHandler([this](HookPoint p) {
      if (!tl_paused_role || p != point_ || fired_.exchange(true)) return;
      reached_.store(true, std::memory_order_release);
      while (!release_.load(std::memory_order_acquire)) std::this_thread::yield();
    });
  }
  PausePoint(const PausePoint &) = delete;
  auto operator=(const PausePoint &) -> PausePoint & = delete;
  ~PausePoint()
  {
    Release();
    test_hooks::SetHandler({});
  }

  auto AwaitReached() const -> bool { return AwaitFlag(reached_, std::chrono::seconds(10)); }
  void Release() { release_.store(true, std::memory_order_release); }

 private:
  HookPoint point_;
  std::atomic<bool> fired_{false};
  std::atomic<bool> reached_{false};
  std::atomic<bool> release_{false};
};

constexpr Key kScenarioKey = 20;
constexpr auto kBlockWindow = std::chrono::milliseconds(200);

template <class DS>
void
SeedNeighbours(DS &ds)
{
  ds.Insert(10, 10);
  ds.Insert(30, 30);
}

}  // namespace

auto
RunRandomHistory(Structure s, std::uint64_t seed, const RandomHistoryOptions &options) -> RandomRun
{
  return WithTestStructure(s, [&]<class DS>(std::type_identity<DS>) {
    test_hooks::ScopedReset reset;
    test_hooks::SetChaos(options.chaos_per_mille);

    RandomRun run;
    DS ds;
    std::mt19937_64 setup{seed};
    for (Key k = 1; k <= options.key_space; ++k) {
      if ((setup() & 1U) != 0) {
        ds.Insert(k, k);
        run.initial |= std::uint64_t{1} << k;
      }
    }

    Recorder recorder{options.threads};
    std::atomic<unsigned> ready{0};
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < options.threads; ++t) {
      threads.emplace_back([&, t] {
        std::mt19937_64 rng{seed * 0x9E3779B97F4A7C15ULL + t + 1};
        std::uniform_int_distribution<Key> key_dist{1, options.key_space};
        std::uniform_int_distribution<unsigned> pct{0, 99};
        ready.fetch_add(1);
        while (ready.load() < options.threads) std::this_thread::yield();
        for (unsigned i = 0; i < options.ops_per_thread; ++i) {
          Event e;
          e.thread = t;
          e.key = key_dist(rng);
          const auto roll = pct(rng);
          if (roll < 30) {
            e.op = OpType::kInsert;
          } else if (roll < 60) {
            e.op = OpType::kRemove;
          } else if (roll < 80) {
            e.op = OpType::kContains;
          } else {
            e.op = OpType::kRangeQuery;
            e.high = std::min<Key>(e.key + rng() % 8, options.key_space);
          }
          e.invoke = recorder.Invoke();
          switch (e.op) {
            case OpType::kInsert: e.ok = ds.Insert(e.key, e.key); break;
            case OpType::kRemove: e.ok = ds.Remove(e.key); break;
            case OpType::kContains: e.ok = ds.Contains(e.key); break;
            case OpType::kRangeQuery: e.rq_mask = MaskOf(ds.RangeQuery(e.key, e.high)); break;
          }
          e.response = recorder.Respond();
          recorder.Append(e);
          if (rng() % 4 == 0) std::this_thread::yield();
        }
      });
    }
    for (auto &th : threads) th.join();
    run.history = recorder.Merge();
    run.result = CheckLinearizable(run.history, run.initial, options.budget);
    return run;
  });
}

auto
PendingStallScenario(Structure s, bool rq_waits) -> ScenarioOutcome
{
  return WithTestStructure(s, [&]<class DS>(std::type_identity<DS>) {
    test_hooks::ScopedReset reset;
    test_hooks::SetRangeQueryPendingWait(rq_waits);
    DS ds;
    SeedNeighbours(ds);

    PausePoint pause{HookPoint::kAfterLinearization};
    std::thread t1{[&] {
      tl_paused_role = true;
      ds.Insert(kScenarioKey, kScenarioKey);
    }};
    ScenarioOutcome out;
    if (!pause.AwaitReached()) {
      pause.Release();
      t1.join();
      out.detail = "T1 never reached its pause point";
      return out;
    }

    const bool contains = ds.Contains(kScenarioKey);
    std::vector<KeyValue> rq;
    std::atomic<bool> rq_done{false};
    std::thread t2{[&] {
      rq = ds.RangeQuery(1, 100);
      rq_done.store(true, std::memory_order_release);
    }};
    const bool finished_while_pending = AwaitFlag(rq_done, kBlockWindow);
    pause.Release();
    t1.join();
    t2.join();

    out.ok = contains && HasKey(rq, kScenarioKey);
    std::ostringstream detail;
    detail << "contains(" << kScenarioKey << ")=" << (contains ? "true" : "false")
           << ", range query " << Keys(rq) << ", range query "
           << (finished_while_pending ? "completed while T1 was stalled" : "waited for T1");
    out.detail = detail.str();
    return out;
  });
}

auto
NeverLinearizedScenario(Structure s) -> ScenarioOutcome
{
  return WithTestStructure(s, [&]<class DS>(std::type_identity<DS>) {
    test_hooks::ScopedReset reset;
    DS ds;
    SeedNeighbours(ds);

    PausePoint pause{HookPoint::kAfterPrepare};
    std::thread t1{[&] {
      tl_paused_role = true;
      ds.Insert(kScenarioKey, kScenarioKey);
    }};
    ScenarioOutcome out;
    if (!pause.AwaitReached()) {
      pause.Release();
      t1.join();
      out.detail = "T1 never reached its pause point";
      return out;
    }

    const bool contains = ds.Contains(kScenarioKey);
    std::vector<KeyValue> rq;
    std::atomic<bool> rq_done{false};
    std::thread t2{[&] {
      rq = ds.RangeQuery(1, 100);
      rq_done.store(true, std::memory_order_release);
    }};
    AwaitFlag(rq_done, kBlockWindow);
    pause.Release();
    t1.join();
    t2.join();

    out.ok = !contains && !HasKey(rq, kScenarioKey) && ds.Contains(kScenarioKey);
    out.detail = std::string{"contains before linearization="} + (contains ? "true" : "false") +
                 ", range query " + Keys(rq);
    return out;
  });
}

auto
UnlockedSuccessorScenario(Structure s, bool update_waits) -> ScenarioOutcome
{
  return WithTestStructure(s, [&]<class DS>(std::type_identity<DS>) {
    test_hooks::ScopedReset reset;
    test_hooks::SetUpdatePendingWait(update_waits);
    DS ds;
    SeedNeighbours(ds);
    constexpr Key kSuccessor = kScenarioKey + 5;

    PausePoint pause{HookPoint::kAfterLinearization};
    std::thread t1{[&] {
      tl_paused_role = true;
      ds.Insert(kScenarioKey, kScenarioKey);
    }};
    ScenarioOutcome out;
    if (!pause.AwaitReached()) {
      pause.Release();
      t1.join();
      out.detail = "T1 never reached its pause point";
      return out;
    }

    std::atomic<bool> t2_done{false};
    std::thread t2{[&] {
      ds.Insert(kSuccessor, kSuccessor);
      t2_done.store(true, std::memory_order_release);
    }};
    const bool t2_finished_first = AwaitFlag(t2_done, kBlockWindow);
    pause.Release();
    t1.join();
    t2.join();

    const auto report = ds.CheckInvariants();
    out.ok = report.ok && ds.Contains(kScenarioKey) && ds.Contains(kSuccessor);
    std::ostringstream detail;
    detail << "T2 " << (t2_finished_first ? "finished while T1 was stalled" : "waited for T1")
           << "; chains " << (report.ok ? "ordered" : "broken");
    for (const auto &p : report.problems) detail << "; " << p;
    out.detail = detail.str();
    return out;
  });
}

auto
SequentialReplay(Structure s, Key key_space, unsigned traces, unsigned ops_per_trace,
                 std::uint64_t seed) -> ReplayOutcome
{
  return WithStructure(s, [&]<class DS>(std::type_identity<DS>) {
    ReplayOutcome out;
    auto fail = [&out](std::string what) {
      if (out.ok) out.detail = std::move(what);
      out.ok = false;
    };
    for (unsigned trace = 0; trace < traces && out.ok; ++trace) {
      DS ds;
      SequentialOracle oracle;
      std::mt19937_64 rng{seed + trace * 0x9E3779B97F4A7C15ULL};
      std::uniform_int_distribution<Key> key_dist{1, key_space};
      for (unsigned step = 0; step <= ops_per_trace && out.ok; ++step) {
        if (step > 0) {
          const auto key = key_dist(rng);
          const auto value = rng();
          const auto roll = rng() % 3;
          bool got = false;
          bool want = false;
          const char *name = "";
          if (roll == 0) {
            name = "remove";
            got = ds.Remove(key);
            want = oracle.Remove(key);
          } else {
            name = "insert";
            got = ds.Insert(key, value);
            want = oracle.Insert(key, value);
          }
          if (got != want) {
            fail("trace " + std::to_string(trace) + " step " + std::to_string(step) + ": " + name +
                 "(" + std::to_string(key) + ") returned " + (got ? "true" : "false"));
          }
        }
        for (Key k = 1; k <= key_space; ++k) {
          if (ds.Contains(k) != oracle.Contains(k)) {
            fail("trace " + std::to_string(trace) + " step " + std::to_string(step) +
                 ": contains(" + std::to_string(k) + ") disagrees");
          }
        }
        for (Key low = 1; low <= key_space; ++low) {
          for (Key high = low; high <= key_space; ++high) {
            auto got = ds.RangeQuery(low, high);
            std::sort(got.begin(), got.end());
            ++out.queries;
            if (got != oracle.RangeQuery(low, high)) {
              fail("trace " + std::to_string(trace) + " step " + std::to_string(step) + ": rq(" +
                   std::to_string(low) + "," + std::to_string(high) + ") returned " + Keys(got));
            }
          }
        }
      }
    }
    return out;
  });
}

}  // namespace bref::lincheck
