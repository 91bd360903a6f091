#include "bref/lincheck/history.hpp"

#include <algorithm>
#include <sstream>

namespace bref::lincheck {

auto
MaskOf(const std::vector<KeyValue> &items) -> std::uint64_t
{
  std::uint64_t mask = 0;
  for (const auto &kv : items) mask |= std::uint64_t{1} << kv.key;
  return mask;
}

auto
RangeMask(Key low, Key high) -> std::uint64_t
{
  if (low > high || low > kMaxHistoryKey) return 0;
  high = std::min(high, kMaxHistoryKey);
  const auto upto = high == 63 ? ~std::uint64_t{0} : (std::uint64_t{1} << (high + 1)) - 1;
  const auto below = (std::uint64_t{1} << low) - 1;
  return upto & ~below;
}

auto
Describe(const Event &e) -> std::string
{
  std::ostringstream out;
  out << "T" << e.thread << " [" << e.invoke << "," << e.response << "] ";
  switch (e.op) {
    case OpType::kInsert: out << "insert(" << e.key << ") -> " << (e.ok ? "true" : "false"); break;
    case OpType::kRemove: out << "remove(" << e.key << ") -> " << (e.ok ? "true" : "false"); break;
    case OpType::kContains:
      out << "contains(" << e.key << ") -> " << (e.ok ? "true" : "false");
      break;
    case OpType::kRangeQuery: {
      out << "rq(" << e.key << "," << e.high << ") -> {";
      bool first = true;
      for (Key k = 0; k <= kMaxHistoryKey; ++k) {
        if ((e.rq_mask >> k & 1U) == 0) continue;
        out << (first ? "" : ",") << k;
        first = false;
      }
      out << "}";
      break;
    }
  }
  return out.str();
}

auto
Recorder::Merge() const -> History
{
  History all;
  for (const auto &log : logs_) all.insert(all.end(), log.begin(), log.end());
  std::sort(all.begin(), all.end(), [](const Event &a, const Event &b) { return a.invoke < b.invoke; });
  return all;
}

}  // namespace bref::lincheck
