#pragma once

#include <compare>
#include <cstdint>
#include <limits>

namespace bref {

using Key = std::uint64_t;
using Value = std::uint64_t;

/// Logical time. Zero is the initial clock value.
using Timestamp = std::uint64_t;

/// Marks a bundle entry (or an announcement slot) whose timestamp is not yet known.
inline constexpr Timestamp kPendingTs = std::numeric_limits<Timestamp>::max();

/// Head sentinel key. User keys live strictly between kMinKey and kMaxKey.
inline constexpr Key kMinKey = 0;
/// Tail sentinel key.
inline constexpr Key kMaxKey = std::numeric_limits<Key>::max();

struct KeyValue {
  Key key;
  Value value;

  friend auto operator<=>(const KeyValue &, const KeyValue &) = default;
};

/// kUnsafe keeps the same structure but skips bundles, the clock and
/// announcements; its range queries read newest links directly.
enum class Variant { kBundled, kUnsafe };

inline constexpr bool
IsUserKey(Key key)
{
  return key > kMinKey && key < kMaxKey;
}

}  // namespace bref
