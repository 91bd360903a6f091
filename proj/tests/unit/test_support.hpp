#pragma once

#include <atomic>
#include <chrono>
#include <thread>

#include "bref/hooks.hpp"

namespace bref::testing {

/// Parks the first thread flagged with Role() at a hook point until released.
class Pause
{
 public:
  explicit Pause(HookPoint point) : point_{point}
  {
    test_hooks::SetHandler([this](HookPoint p) {
      if (!Role() || p != point_ || fired_.exchange(true)) return;
      reached_.store(true, std::memory_order_release);
      while (!release_.load(std::memory_order_acquire)) std::this_thread::yield();
    });
  }
  Pause(const Pause &) = delete;
  auto operator=(const Pause &) -> Pause & = delete;
  ~Pause()
  {
    Release();
    test_hooks::SetHandler({});
  }

  static auto
  Role() -> bool &
  {
    thread_local bool role = false;
    return role;
  }

  auto
  AwaitReached() const -> bool
  {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
    while (!reached_.load(std::memory_order_acquire)) {
      if (std::chrono::steady_clock::now() > deadline) return false;
      std::this_thread::yield();
    }
    return true;
  }

  void Release() { release_.store(true, std::memory_order_release); }

 private:
  HookPoint point_;
  std::atomic<bool> fired_{false};
  std::atomic<bool> reached_{false};
  std::atomic<bool> release_{false};
};

}  // namespace bref::testing
