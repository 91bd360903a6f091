#pragma once

#include <atomic>
#include <cstdint>
#include <thread>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

namespace bref {

inline void
CpuRelax() noexcept
{
#if defined(__x86_64__) || defined(__i386__)
  _mm_pause();
#elif defined(__aarch64__)
  asm volatile("yield" ::: "memory");
#endif
}

/// Bounded exponential spinning that degrades into yielding to the scheduler.
/// Waits in this library are expected to be short, but a waiter must never
/// starve the thread it is waiting on when cores are oversubscribed.
class Backoff
{
 public:
  void
  Pause() noexcept
  {
    if (spins_ < kMaxSpinRounds) {
      for (std::uint32_t i = 0; i < (1U << spins_); ++i) CpuRelax();
      ++spins_;
    } else {
      std::this_thread::yield();
    }
  }

  void
  Reset() noexcept
  {
    spins_ = 0;
  }

 private:
  static constexpr std::uint32_t kMaxSpinRounds = 6;

  std::uint32_t spins_ = 0;
};

/// Per-node test-and-test-and-set latch. Satisfies Lockable.
class Latch
{
 public:
  Latch() = default;
  Latch(const Latch &) = delete;
  auto operator=(const Latch &) -> Latch & = delete;

  void
  lock() noexcept
  {
    Backoff backoff;
    while (locked_.exchange(true, std::memory_order_acquire)) {
      while (locked_.load(std::memory_order_relaxed)) backoff.Pause();
    }
  }

  auto
  try_lock() noexcept -> bool
  {
    return !locked_.load(std::memory_order_relaxed) &&
           !locked_.exchange(true, std::memory_order_acquire);
  }

  void
  unlock() noexcept
  {
    locked_.store(false, std::memory_order_release);
  }

  auto
  IsLocked() const noexcept -> bool
  {
    return locked_.load(std::memory_order_relaxed);
  }

 private:
  std::atomic<bool> locked_{false};
};

}  // namespace bref
