#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "bref/clock.hpp"
#include "bref/per_thread.hpp"
#include "bref/thread_registry.hpp"
#include "bref/types.hpp"

namespace bref {

/// Type-erased retired object.
struct Retired {
  void *ptr;
  void (*destroy)(void *) noexcept;
  void (*poison)(void *) noexcept;
};

/// DEBRA-style epoch-based reclamation with per-thread limbo bags.
///
/// A thread announces the global epoch when it enters an operation and goes
/// quiescent on exit. The epoch advances only once every active thread has
/// announced the current value, and an object retired in epoch e is freed
/// once the global epoch reaches e + 2.
///
/// The domain also provides read sections and Synchronize(), a grace-period
/// wait over read sections only. Read sections must not block on anything,
/// so a thread holding latches may call Synchronize() safely.
class EpochDomain
{
 public:
  struct Options {
    /// false = leaky mode: retired objects are kept until destruction.
    bool enabled = true;
    /// Test aid: retired objects are poisoned instead of freed and only
    /// released when the domain is destroyed.
    bool poison_instead_of_free = false;
  };

  /// Called with (retire epoch, epoch at free time) for every object freed.
  using FreeObserver = std::function<void(std::uint64_t, std::uint64_t)>;

  EpochDomain() : EpochDomain(Options{}) {}
  explicit EpochDomain(Options options);
  EpochDomain(const EpochDomain &) = delete;
  auto operator=(const EpochDomain &) -> EpochDomain & = delete;
  ~EpochDomain();

  void Enter();
  void Exit();

  auto
  InGuard() const -> bool
  {
    return (records_[ThreadIndex()].announce.load(std::memory_order_relaxed) & 1U) != 0;
  }

  template <class T>
  void
  Retire(T *object)
  {
    Retired r{object, [](void *p) noexcept { delete static_cast<T *>(p); }, nullptr};
    if constexpr (requires(T *t) { t->Poison(); }) {
      r.poison = [](void *p) noexcept { static_cast<T *>(p)->Poison(); };
    }
    RetireErased(r);
  }

  /// Retires an object released through a custom function (e.g. a chain).
  template <class T, void (*Destroy)(T *) noexcept>
  void
  RetireWith(T *object)
  {
    RetireErased({object, [](void *p) noexcept { Destroy(static_cast<T *>(p)); }, nullptr});
  }

  void RetireErased(Retired retired);

  /// Advances the global epoch if every active thread has caught up.
  auto TryAdvance() -> bool;

  /// Frees the calling thread's bags that are past their grace period.
  void Collect();

  auto
  CurrentEpoch() const -> std::uint64_t
  {
    return global_epoch_.load(std::memory_order_seq_cst);
  }

  void EnterRead();
  void ExitRead();

  /// Waits until every read section open at the time of the call has closed.
  void Synchronize() const;

  void SetFreeObserver(FreeObserver observer) { free_observer_ = std::move(observer); }

  auto RetiredCount() const -> std::uint64_t { return retired_.Sum(); }
  auto FreedCount() const -> std::uint64_t { return freed_.Sum(); }
  auto Enabled() const -> bool { return options_.enabled; }

 private:
  static constexpr std::uint32_t kAdvanceInterval = 32;

  struct Bag {
    std::uint64_t epoch = 0;
    std::vector<Retired> items;
  };

  struct alignas(kCacheLine) Record {
    /// (epoch << 1) | active
    std::atomic<std::uint64_t> announce{0};
    /// odd while inside a read section
    std::atomic<std::uint64_t> read_seq{0};
    std::uint64_t last_seen = 0;
    std::uint32_t enters = 0;
    std::array<Bag, 3> bags;
    /// leaked (leaky mode) or poisoned objects, released at destruction
    std::vector<Retired> deferred;
  };

  void FreeBag(Bag &bag, std::uint64_t now);
  void Release(const Retired &r) noexcept;

  Options options_;
  alignas(kCacheLine) std::atomic<std::uint64_t> global_epoch_{2};
  std::array<Record, kMaxThreads> records_{};
  PerThreadCounter retired_;
  PerThreadCounter freed_;
  FreeObserver free_observer_;
};

/// RAII operation guard; a no-op when reclamation is disabled.
class EpochGuard
{
 public:
  explicit EpochGuard(EpochDomain &domain) : domain_{domain.Enabled() ? &domain : nullptr}
  {
    if (domain_ != nullptr) domain_->Enter();
  }
  EpochGuard(const EpochGuard &) = delete;
  auto operator=(const EpochGuard &) -> EpochGuard & = delete;
  ~EpochGuard()
  {
    if (domain_ != nullptr) domain_->Exit();
  }

 private:
  EpochDomain *domain_;
};

class ReadSection
{
 public:
  explicit ReadSection(EpochDomain &domain) : domain_{domain} { domain_.EnterRead(); }
  ReadSection(const ReadSection &) = delete;
  auto operator=(const ReadSection &) -> ReadSection & = delete;
  ~ReadSection() { domain_.ExitRead(); }

 private:
  EpochDomain &domain_;
};

/// Announced snapshot timestamps of in-flight range queries.
class ActiveRangeQueryTable
{
 public:
  static constexpr Timestamp kIdle = kPendingTs - 1;

  ActiveRangeQueryTable()
  {
    for (auto &s : slots_) s.value.store(kIdle, std::memory_order_relaxed);
  }

  /// Marks the slot pending, reads the clock, publishes the value.
  auto
  Announce(const GlobalClock &clock) -> Timestamp
  {
    auto &slot = slots_[ThreadIndex()].value;
    slot.store(kPendingTs, std::memory_order_seq_cst);
    const auto ts = clock.Read();
    slot.store(ts, std::memory_order_seq_cst);
    return ts;
  }

  void
  Finish()
  {
    slots_[ThreadIndex()].value.store(kIdle, std::memory_order_release);
  }

  auto
  Slot(std::size_t thread) const -> Timestamp
  {
    return slots_[thread].value.load(std::memory_order_acquire);
  }

  /// Oldest announced timestamp, or the current clock when none is active.
  /// Waits out slots that are between their clock read and announcement.
  auto MinActive(const GlobalClock &clock) const -> Timestamp;

 private:
  std::array<Padded<std::atomic<Timestamp>>, kMaxThreads> slots_{};
};

/// Shared state behind one or more structures: clock, reclamation, and the
/// range-query announcement table.
struct RuntimeOptions {
  bool reclaim = false;
  std::uint64_t relax_threshold = 1;
  bool poison_instead_of_free = false;
};

class Runtime
{
 public:
  Runtime() : Runtime(RuntimeOptions{}) {}
  explicit Runtime(RuntimeOptions options)
      : options_{options},
        clock_{options.relax_threshold},
        epochs_{EpochDomain::Options{options.reclaim, options.poison_instead_of_free}}
  {
  }

  auto Clock() -> GlobalClock & { return clock_; }
  auto Clock() const -> const GlobalClock & { return clock_; }
  auto Epochs() -> EpochDomain & { return epochs_; }
  auto RangeQueries() -> ActiveRangeQueryTable & { return rq_table_; }
  auto Options() const -> const RuntimeOptions & { return options_; }
  auto Reclaiming() const -> bool { return options_.reclaim; }

  /// Snapshot timestamp for a range query; announced only when pruning can run.
  auto
  BeginRangeQuery() -> Timestamp
  {
    return options_.reclaim ? rq_table_.Announce(clock_) : clock_.Read();
  }

  void
  EndRangeQuery()
  {
    if (options_.reclaim) rq_table_.Finish();
  }

  auto
  MinActiveRangeQuery() const -> Timestamp
  {
    return rq_table_.MinActive(clock_);
  }

  PerThreadCounter entries_created;
  PerThreadCounter entries_pruned;
  /// GetNext dereferences that found no satisfying entry (must stay 0).
  PerThreadCounter missing_entries;
  /// Range-query visits to poisoned nodes (test builds, must stay 0).
  PerThreadCounter poisoned_visits;

 private:
  RuntimeOptions options_;
  GlobalClock clock_;
  EpochDomain epochs_;
  ActiveRangeQueryTable rq_table_;
};

/// Called once per node visited by a prune pass; periodically gives up the
/// CPU so a continuous pruner does not starve workers on oversubscribed cores.
inline void
PruneStep(std::size_t &visited)
{
  if (++visited % 1024 == 0) std::this_thread::yield();
}

/// Background thread running prune passes every `delay`.
class BackgroundPruner
{
 public:
  using Pass = std::function<std::size_t()>;

  BackgroundPruner(std::chrono::milliseconds delay, std::vector<Pass> passes);
  BackgroundPruner(const BackgroundPruner &) = delete;
  auto operator=(const BackgroundPruner &) -> BackgroundPruner & = delete;
  ~BackgroundPruner();

  void Start();
  void Stop();

  auto PassesRun() const -> std::uint64_t { return passes_run_.load(); }
  auto EntriesRecycled() const -> std::uint64_t { return recycled_.load(); }

 private:
  void Loop();

  std::chrono::milliseconds delay_;
  std::vector<Pass> passes_;
  std::thread thread_;
  std::mutex mutex_;
  std::condition_variable cv_;
  bool stop_ = false;
  std::atomic<std::uint64_t> passes_run_{0};
  std::atomic<std::uint64_t> recycled_{0};
};

}  // namespace bref
