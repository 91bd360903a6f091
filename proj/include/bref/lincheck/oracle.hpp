#pragma once

#include <map>
#include <vector>

#include "bref/types.hpp"

namespace bref::lincheck {

/// Sequential ordered set used as the reference for every check.
class SequentialOracle
{
 public:
  auto
  Insert(Key key, Value value) -> bool
  {
    return map_.emplace(key, value).second;
  }

  auto
  Remove(Key key) -> bool
  {
    return map_.erase(key) == 1;
  }

  auto
  Contains(Key key) const -> bool
  {
    return map_.contains(key);
  }

  /// Pairs with key in [low, high], ascending.
  auto
  RangeQuery(Key low, Key high) const -> std::vector<KeyValue>
  {
    std::vector<KeyValue> out;
    if (low > high) return out;
    for (auto it = map_.lower_bound(low); it != map_.end() && it->first <= high; ++it) {
      out.push_back({it->first, it->second});
    }
    return out;
  }

  auto Size() const -> std::size_t { return map_.size(); }

 private:
  std::map<Key, Value> map_;
};

}  // namespace bref::lincheck
