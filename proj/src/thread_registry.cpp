#include "bref/thread_registry.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <vector>

namespace bref {
namespace {

struct Registry {
  std::mutex mutex;
  std::vector<std::size_t> free_slots;
  std::size_t next = 0;
  std::atomic<std::size_t> high_water{0};
};

auto
GetRegistry() -> Registry &
{
  static Registry registry;
  return registry;
}

struct ThreadSlot {
  std::size_t index;

  ThreadSlot()
  {
    auto &reg = GetRegistry();
    std::lock_guard lock{reg.mutex};
    if (!reg.free_slots.empty()) {
      index = reg.free_slots.back();
      reg.free_slots.pop_back();
      return;
    }
    if (reg.next >= kMaxThreads) {
      std::fprintf(stderr, "bref: more than %zu live threads\n", kMaxThreads);
      std::abort();
    }
    index = reg.next++;
    reg.high_water.store(reg.next, std::memory_order_release);
  }

  ~ThreadSlot()
  {
    auto &reg = GetRegistry();
    std::lock_guard lock{reg.mutex};
    reg.free_slots.push_back(index);
  }
};

}  // namespace

auto
ThreadIndex() -> std::size_t
{
  thread_local ThreadSlot slot;
  return slot.index;
}

auto
ThreadIndexHighWater() -> std::size_t
{
  return GetRegistry().high_water.load(std::memory_order_acquire);
}

}  // namespace bref
