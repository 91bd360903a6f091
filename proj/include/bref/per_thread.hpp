#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <new>

#include "bref/thread_registry.hpp"

namespace bref {

#ifdef __cpp_lib_hardware_interference_size
inline constexpr std::size_t kCacheLine = std::hardware_destructive_interference_size;
#else
inline constexpr std::size_t kCacheLine = 64;
#endif

template <class T>
struct alignas(kCacheLine) Padded {
  T value{};
};

/// Counter sharded by thread index; each shard is written only by its owner.
class PerThreadCounter
{
 public:
  void
  Add(std::uint64_t delta = 1) noexcept
  {
    auto &shard = shards_[ThreadIndex()].value;
    shard.store(shard.load(std::memory_order_relaxed) + delta, std::memory_order_relaxed);
  }

  auto
  Sum() const noexcept -> std::uint64_t
  {
    std::uint64_t total = 0;
    for (const auto &s : shards_) total += s.value.load(std::memory_order_relaxed);
    return total;
  }

  void
  Reset() noexcept
  {
    for (auto &s : shards_) s.value.store(0, std::memory_order_relaxed);
  }

 private:
  std::array<Padded<std::atomic<std::uint64_t>>, kMaxThreads> shards_{};
};

}  // namespace bref
