#pragma once

#include <cstddef>

namespace bref {

/// Upper bound on simultaneously registered threads.
inline constexpr std::size_t kMaxThreads = 256;

/// Dense index of the calling thread in [0, kMaxThreads). Assigned on first
/// use and recycled when the thread exits, so per-thread arrays can be indexed
/// directly. Aborts if more than kMaxThreads threads are alive at once.
auto ThreadIndex() -> std::size_t;

/// One past the largest index ever handed out. Scans over per-thread slots
/// only need to look below this bound.
auto ThreadIndexHighWater() -> std::size_t;

}  // namespace bref
