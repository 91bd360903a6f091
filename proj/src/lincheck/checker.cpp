#include "bref/lincheck/checker.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

namespace bref::lincheck {
namespace {

class Search
{
 public:
  Search(const History &history, std::uint64_t budget) : budget_{budget}
  {
    for (const auto &e : history) {
      if (e.thread >= threads_.size()) threads_.resize(e.thread + 1);
      threads_[e.thread].push_back(&e);
    }
    for (auto &t : threads_) {
      std::stable_sort(t.begin(), t.end(),
                       [](const Event *a, const Event *b) { return a->invoke < b->invoke; });
    }
    total_ = history.size();
    pos_.assign(threads_.size(), 0);
  }

  auto
  Run(std::uint64_t initial) -> CheckResult
  {
    CheckResult result;
    const bool found = Visit(initial);
    result.states = visited_.size();
    if (found) return result;
    result.verdict = exhausted_ ? Verdict::kBudgetExhausted : Verdict::kViolation;
    if (!exhausted_) result.counterexample = Counterexample();
    return result;
  }

 private:
  static auto
  Apply(const Event &e, std::uint64_t set, std::uint64_t &next) -> bool
  {
    const auto bit = std::uint64_t{1} << e.key;
    const bool present = (set & bit) != 0;
    next = set;
    switch (e.op) {
      case OpType::kInsert:
        next = set | bit;
        return e.ok == !present;
      case OpType::kRemove:
        next = set & ~bit;
        return e.ok == present;
      case OpType::kContains: return e.ok == present;
      case OpType::kRangeQuery: return e.rq_mask == (set & RangeMask(e.key, e.high));
    }
    return false;
  }

  auto
  StateKey(std::uint64_t set) const -> std::string
  {
    std::string key(sizeof(set) + pos_.size() * sizeof(std::uint16_t), '\0');
    std::memcpy(key.data(), &set, sizeof(set));
    std::memcpy(key.data() + sizeof(set), pos_.data(), pos_.size() * sizeof(std::uint16_t));
    return key;
  }

  auto
  Visit(std::uint64_t set) -> bool
  {
    if (order_.size() == total_) return true;
    if (visited_.size() >= budget_) {
      exhausted_ = true;
      return false;
    }
    if (!visited_.insert(StateKey(set)).second) return false;

    std::uint64_t min_response = std::numeric_limits<std::uint64_t>::max();
    for (std::size_t t = 0; t < threads_.size(); ++t) {
      if (pos_[t] < threads_[t].size()) min_response = std::min(min_response, threads_[t][pos_[t]]->response);
    }

    bool any_applicable = false;
    for (std::size_t t = 0; t < threads_.size(); ++t) {
      if (pos_[t] >= threads_[t].size()) continue;
      const Event &e = *threads_[t][pos_[t]];
      if (e.invoke > min_response) continue;
      std::uint64_t next = 0;
      if (!Apply(e, set, next)) continue;
      any_applicable = true;
      order_.push_back(&e);
      ++pos_[t];
      if (Visit(next)) return true;
      --pos_[t];
      order_.pop_back();
      if (exhausted_) return false;
    }
    if (!any_applicable && order_.size() >= best_.size()) {
      best_ = order_;
      best_pos_ = pos_;
      best_set_ = set;
    }
    return false;
  }

  auto
  Counterexample() const -> std::string
  {
    std::ostringstream out;
    out << "longest legal prefix (" << best_.size() << " of " << total_ << " operations):\n";
    for (const auto *e : best_) out << "  " << Describe(*e) << '\n';
    out << "set after prefix: {";
    bool first = true;
    for (Key k = 0; k <= kMaxHistoryKey; ++k) {
      if ((best_set_ >> k & 1U) == 0) continue;
      out << (first ? "" : ",") << k;
      first = false;
    }
    out << "}\nno pending operation can be placed next:\n";
    for (std::size_t t = 0; t < threads_.size(); ++t) {
      if (t < best_pos_.size() && best_pos_[t] < threads_[t].size()) {
        out << "  " << Describe(*threads_[t][best_pos_[t]]) << '\n';
      }
    }
    return out.str();
  }

  std::vector<std::vector<const Event *>> threads_;
  std::vector<std::uint16_t> pos_;
  std::size_t total_ = 0;
  std::uint64_t budget_;
  bool exhausted_ = false;
  std::unordered_set<std::string> visited_;
  std::vector<const Event *> order_;
  std::vector<const Event *> best_;
  std::vector<std::uint16_t> best_pos_;
  std::uint64_t best_set_ = 0;
};

}  // namespace

auto
VerdictName(Verdict v) -> const char *
{
  switch (v) {
    case Verdict::kOk: return "ok";
    case Verdict::kViolation: return "violation";
    case Verdict::kBudgetExhausted: return "budget-exhausted";
  }
  return "?";
}

auto
CheckLinearizable(const History &history, std::uint64_t initial, std::uint64_t budget) -> CheckResult
{
  Search search{history, budget};
  return search.Run(initial);
}

}  // namespace bref::lincheck
