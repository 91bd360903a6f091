#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "bref/types.hpp"

namespace bref::lincheck {

enum class OpType : std::uint8_t { kInsert, kRemove, kContains, kRangeQuery };

/// One completed operation. Keys must be below 64 so that set states and
/// range-query results fit in a bit mask.
struct Event {
  unsigned thread = 0;
  OpType op = OpType::kContains;
  Key key = 0;
  Key high = 0;  // range queries only
  bool ok = false;  // insert/remove/contains result
  std::uint64_t rq_mask = 0;  // keys returned by a range query
  std::uint64_t invoke = 0;
  std::uint64_t response = 0;
};

using History = std::vector<Event>;

inline constexpr Key kMaxHistoryKey = 63;

auto MaskOf(const std::vector<KeyValue> &items) -> std::uint64_t;
auto RangeMask(Key low, Key high) -> std::uint64_t;
auto Describe(const Event &e) -> std::string;

/// Per-thread append-only logs stamped from one shared counter.
class Recorder
{
 public:
  explicit Recorder(unsigned threads) : logs_(threads) {}

  auto Invoke() -> std::uint64_t { return stamp_.fetch_add(1, std::memory_order_seq_cst); }
  auto Respond() -> std::uint64_t { return stamp_.fetch_add(1, std::memory_order_seq_cst); }

  void
  Append(const Event &e)
  {
    logs_[e.thread].push_back(e);
  }

  auto Merge() const -> History;

 private:
  std::atomic<std::uint64_t> stamp_{0};
  std::vector<std::vector<Event>> logs_;
};

}  // namespace bref::lincheck
