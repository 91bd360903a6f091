#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bref/bundle.hpp"

namespace bref {

/// Outcome of a quiescent sweep over a whole structure.
struct InvariantReport {
  bool ok = true;
  std::vector<std::string> problems;
  std::size_t nodes = 0;  // user nodes reachable through newest links
  std::size_t bundles = 0;
  std::size_t entries = 0;
  std::size_t longest_chain = 0;

  void
  Fail(std::string problem)
  {
    ok = false;
    if (problems.size() < 16) problems.push_back(std::move(problem));
  }

  void
  Account(const ChainCheck &check, const std::string &where)
  {
    ++bundles;
    entries += check.length;
    if (check.length > longest_chain) longest_chain = check.length;
    if (!check.ok) Fail(where + ": " + check.problem);
  }

  /// True when every bundle holds exactly one entry.
  auto
  FullyPruned() const -> bool
  {
    return ok && entries == bundles;
  }
};

}  // namespace bref
