#pragma once

#include <cstdint>
#include <string>

#include "bref/lincheck/history.hpp"

namespace bref::lincheck {

enum class Verdict { kOk, kViolation, kBudgetExhausted };

auto VerdictName(Verdict v) -> const char *;

struct CheckResult {
  Verdict verdict = Verdict::kOk;
  /// For violations: the longest consistent prefix found and the operations
  /// that could not be placed after it.
  std::string counterexample;
  std::uint64_t states = 0;
};

/// Searches for a sequential order of `history` that respects real-time order
/// and ordered-set semantics, starting from the set `initial`. Per-thread
/// events must already be in program order. The search explores at most
/// `budget` distinct states.
auto CheckLinearizable(const History &history, std::uint64_t initial = 0,
                       std::uint64_t budget = 5'000'000) -> CheckResult;

}  // namespace bref::lincheck
