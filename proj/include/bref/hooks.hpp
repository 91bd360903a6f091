#pragma once

#include <cstdint>
#include <functional>

namespace bref {

/// Named points inside update and range-query paths where a test build can
/// pause a thread or inject a yield.
enum class HookPoint : std::uint8_t {
  kBeforeUpdate,         // locks held, nothing prepared yet
  kAfterPrepare,         // all bundles pending
  kAfterClock,           // timestamp obtained, linearization write not done
  kAfterLinearization,   // linearization write done, bundles still pending
  kAfterFinalize,        // bundles finalized, locks still held
  kBeforeSynchronize,    // tree remove waiting for readers
  kRangeQueryAfterClock, // range query holds its snapshot timestamp
  kScanStep,             // range query about to follow a bundle
};

/// Hook policy for benchmark builds: every call folds away.
struct NoHooks {
  static constexpr bool kEnabled = false;

  static constexpr void
  At(HookPoint) noexcept
  {
  }

  static constexpr bool
  RangeQueryWaitsForPending() noexcept
  {
    return true;
  }

  static constexpr bool
  UpdateWaitsForPending() noexcept
  {
    return true;
  }
};

/// Hook policy for test builds. Behaviour is controlled through the
/// functions in namespace test_hooks; defaults match NoHooks.
struct TestHooks {
  static constexpr bool kEnabled = true;

  static void At(HookPoint point);
  static bool RangeQueryWaitsForPending() noexcept;
  static bool UpdateWaitsForPending() noexcept;
};

namespace test_hooks {

/// Installs a callback run at every hook point on every thread. Must be set
/// while no structure operation is in flight.
void SetHandler(std::function<void(HookPoint)> handler);

/// Probability (per mille) of yielding at each hook point. Used to shake out
/// interleavings on machines with few cores.
void SetChaos(std::uint32_t per_mille);

/// Negative-control toggles. Disabling a wait breaks linearizability.
void SetRangeQueryPendingWait(bool enabled);
void SetUpdatePendingWait(bool enabled);

/// Restores all defaults.
void Reset();

/// RAII wrapper calling Reset() on scope exit.
class ScopedReset
{
 public:
  ScopedReset() = default;
  ScopedReset(const ScopedReset &) = delete;
  auto operator=(const ScopedReset &) -> ScopedReset & = delete;
  ~ScopedReset() { Reset(); }
};

}  // namespace test_hooks
}  // namespace bref
