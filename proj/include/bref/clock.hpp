#pragma once

#include <array>
#include <atomic>
#include <cstdint>

#include "bref/per_thread.hpp"
#include "bref/spin.hpp"
#include "bref/types.hpp"

namespace bref {

/// Relaxation threshold that disables clock advancement entirely.
inline constexpr std::uint64_t kRelaxNever = 0;

/// The global logical clock ordering all successful updates.
///
/// With relax threshold T = 1 every update takes a fresh post-increment value.
/// With T > 1 each thread advances the clock only on its T-th, 2T-th, ...
/// update and otherwise stamps its entries with the current value; kRelaxNever
/// never advances it. Any T other than 1 weakens range queries.
class GlobalClock
{
 public:
  explicit GlobalClock(std::uint64_t relax_threshold = 1) : relax_{relax_threshold} {}

  GlobalClock(const GlobalClock &) = delete;
  auto operator=(const GlobalClock &) -> GlobalClock & = delete;

  auto
  Read() const noexcept -> Timestamp
  {
    return now_.load(std::memory_order_seq_cst);
  }

  /// Timestamp for one successful update, advancing the clock per the policy.
  auto
  Stamp() noexcept -> Timestamp
  {
    if (relax_ == 1) return now_.fetch_add(1, std::memory_order_seq_cst) + 1;

    auto &count = per_thread_[ThreadIndex()].value;
    const auto n = count.load(std::memory_order_relaxed) + 1;
    count.store(n, std::memory_order_relaxed);
    if (relax_ != kRelaxNever && n % relax_ == 0) {
      return now_.fetch_add(1, std::memory_order_seq_cst) + 1;
    }
    return now_.load(std::memory_order_seq_cst);
  }

  /// With T = 1, waits until every smaller timestamp has been published, so
  /// that linearization writes become visible in timestamp order.
  void
  AwaitTurn(Timestamp ts) const noexcept
  {
    if (relax_ != 1) return;
    Backoff backoff;
    while (published_.load(std::memory_order_acquire) != ts - 1) backoff.Pause();
  }

  /// Marks the linearization write stamped `ts` as done.
  void
  Publish(Timestamp ts) noexcept
  {
    if (relax_ == 1) published_.store(ts, std::memory_order_release);
  }

  auto
  RelaxThreshold() const noexcept -> std::uint64_t
  {
    return relax_;
  }

 private:
  alignas(kCacheLine) std::atomic<Timestamp> now_{0};
  alignas(kCacheLine) std::atomic<Timestamp> published_{0};
  std::uint64_t relax_;
  std::array<Padded<std::atomic<std::uint64_t>>, kMaxThreads> per_thread_{};
};

}  // namespace bref
