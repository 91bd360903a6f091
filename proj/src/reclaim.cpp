#include "bref/reclaim.hpp"

#include <algorithm>
#include <cassert>

#include "bref/spin.hpp"

namespace bref {

EpochDomain::EpochDomain(Options options) : options_{options} {}

EpochDomain::~EpochDomain()
{
  for (auto &rec : records_) {
    for (auto &bag : rec.bags) {
      for (const auto &r : bag.items) r.destroy(r.ptr);
      bag.items.clear();
    }
    for (const auto &r : rec.deferred) r.destroy(r.ptr);
    rec.deferred.clear();
  }
}

void
EpochDomain::Enter()
{
  auto &rec = records_[ThreadIndex()];
  assert((rec.announce.load(std::memory_order_relaxed) & 1U) == 0 && "nested epoch guard");

  std::uint64_t epoch = global_epoch_.load(std::memory_order_seq_cst);
  while (true) {
    rec.announce.store((epoch << 1) | 1U, std::memory_order_seq_cst);
    const auto again = global_epoch_.load(std::memory_order_seq_cst);
    if (again == epoch) break;
    epoch = again;
  }

  if (epoch != rec.last_seen) {
    rec.last_seen = epoch;
    for (auto &bag : rec.bags) {
      if (!bag.items.empty() && bag.epoch + 2 <= epoch) FreeBag(bag, epoch);
    }
  }
  if (++rec.enters % kAdvanceInterval == 0) TryAdvance();
}

void
EpochDomain::Exit()
{
  auto &rec = records_[ThreadIndex()];
  const auto a = rec.announce.load(std::memory_order_relaxed);
  rec.announce.store(a & ~std::uint64_t{1}, std::memory_order_release);
}

void
EpochDomain::RetireErased(Retired retired)
{
  auto &rec = records_[ThreadIndex()];
  retired_.Add();
  if (!options_.enabled) {
    rec.deferred.push_back(retired);
    return;
  }
  const auto epoch = global_epoch_.load(std::memory_order_seq_cst);
  auto &bag = rec.bags[epoch % 3];
  if (bag.epoch != epoch) {
    // A bag reused for a newer epoch holds items at least three epochs old.
    if (!bag.items.empty()) FreeBag(bag, epoch);
    bag.epoch = epoch;
  }
  bag.items.push_back(retired);
}

auto
EpochDomain::TryAdvance() -> bool
{
  const auto epoch = global_epoch_.load(std::memory_order_seq_cst);
  const auto n = ThreadIndexHighWater();
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = records_[i].announce.load(std::memory_order_seq_cst);
    if ((a & 1U) != 0 && (a >> 1) != epoch) return false;
  }
  auto expected = epoch;
  return global_epoch_.compare_exchange_strong(expected, epoch + 1, std::memory_order_seq_cst);
}

void
EpochDomain::Collect()
{
  auto &rec = records_[ThreadIndex()];
  const auto epoch = global_epoch_.load(std::memory_order_seq_cst);
  for (auto &bag : rec.bags) {
    if (!bag.items.empty() && bag.epoch + 2 <= epoch) FreeBag(bag, epoch);
  }
}

void
EpochDomain::FreeBag(Bag &bag, std::uint64_t now)
{
  auto &rec = records_[ThreadIndex()];
  for (const auto &r : bag.items) {
    if (free_observer_) free_observer_(bag.epoch, now);
    if (options_.poison_instead_of_free) {
      if (r.poison != nullptr) r.poison(r.ptr);
      rec.deferred.push_back(r);
    } else {
      r.destroy(r.ptr);
    }
  }
  freed_.Add(bag.items.size());
  bag.items.clear();
}

void
EpochDomain::EnterRead()
{
  auto &seq = records_[ThreadIndex()].read_seq;
  seq.store(seq.load(std::memory_order_relaxed) + 1, std::memory_order_seq_cst);
}

void
EpochDomain::ExitRead()
{
  auto &seq = records_[ThreadIndex()].read_seq;
  seq.store(seq.load(std::memory_order_relaxed) + 1, std::memory_order_release);
}

void
EpochDomain::Synchronize() const
{
  std::atomic_thread_fence(std::memory_order_seq_cst);
  const auto self = ThreadIndex();
  const auto n = ThreadIndexHighWater();
  for (std::size_t i = 0; i < n; ++i) {
    if (i == self) continue;
    const auto seen = records_[i].read_seq.load(std::memory_order_seq_cst);
    if ((seen & 1U) == 0) continue;
    Backoff backoff;
    while (records_[i].read_seq.load(std::memory_order_acquire) == seen) backoff.Pause();
  }
}

auto
ActiveRangeQueryTable::MinActive(const GlobalClock &clock) const -> Timestamp
{
  // Any query announcing after this read observes a clock value >= now.
  Timestamp min = clock.Read();
  const auto n = ThreadIndexHighWater();
  for (std::size_t i = 0; i < n; ++i) {
    Backoff backoff;
    auto v = slots_[i].value.load(std::memory_order_seq_cst);
    while (v == kPendingTs) {
      backoff.Pause();
      v = slots_[i].value.load(std::memory_order_seq_cst);
    }
    if (v != kIdle) min = std::min(min, v);
  }
  return min;
}

BackgroundPruner::BackgroundPruner(std::chrono::milliseconds delay, std::vector<Pass> passes)
    : delay_{delay}, passes_{std::move(passes)}
{
}

BackgroundPruner::~BackgroundPruner() { Stop(); }

void
BackgroundPruner::Start()
{
  if (thread_.joinable()) return;
  {
    std::lock_guard lock{mutex_};
    stop_ = false;
  }
  thread_ = std::thread{[this] { Loop(); }};
}

void
BackgroundPruner::Stop()
{
  {
    std::lock_guard lock{mutex_};
    stop_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

void
BackgroundPruner::Loop()
{
  while (true) {
    {
      std::unique_lock lock{mutex_};
      if (delay_.count() > 0) {
        cv_.wait_for(lock, delay_, [this] { return stop_; });
      }
      if (stop_) return;
    }
    std::size_t recycled = 0;
    for (auto &pass : passes_) recycled += pass();
    recycled_.fetch_add(recycled, std::memory_order_relaxed);
    passes_run_.fetch_add(1, std::memory_order_relaxed);
    if (delay_.count() == 0) std::this_thread::yield();
  }
}

}  // namespace bref
