// Correctness runner: random concurrent histories, race scenarios and
// sequential replays against the ordered-set oracle.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bref/lincheck/scenarios.hpp"

using namespace bref;
using namespace bref::lincheck;

namespace {

auto
RunRandom(Structure s, std::uint64_t seeds, std::uint64_t first_seed) -> bool
{
  std::uint64_t ok = 0;
  std::uint64_t exhausted = 0;
  for (std::uint64_t i = 0; i < seeds; ++i) {
    auto run = RunRandomHistory(s, first_seed + i);
    if (run.result.verdict == Verdict::kOk) {
      ++ok;
    } else if (run.result.verdict == Verdict::kBudgetExhausted) {
      ++exhausted;
    } else {
      std::cout << harness::StructureName(s) << " seed " << first_seed + i << ": violation\n"
                << run.result.counterexample << "full history (initial set mask " << run.initial
                << "):\n";
      for (const auto &e : run.history) std::cout << "  " << Describe(e) << '\n';
      return false;
    }
  }
  std::cout << harness::StructureName(s) << ": " << ok << " ok, " << exhausted
            << " budget-exhausted of " << seeds << '\n';
  return exhausted == 0;
}

auto
Report(const char *name, const ScenarioOutcome &outcome, bool expect_ok) -> bool
{
  const bool pass = outcome.ok == expect_ok;
  std::cout << (pass ? "PASS " : "FAIL ") << name << (expect_ok ? "" : " (negative control)")
            << ": " << outcome.detail << '\n';
  return pass;
}

auto
RunScenarios(Structure s) -> bool
{
  bool pass = true;
  pass &= Report("pending stall", PendingStallScenario(s, true), true);
  pass &= Report("pending stall without range-query wait", PendingStallScenario(s, false), false);
  pass &= Report("never linearized", NeverLinearizedScenario(s), true);
  pass &= Report("unlocked successor", UnlockedSuccessorScenario(s, true), true);
  if (s != Structure::kSkipList) {
    pass &= Report("unlocked successor without update wait", UnlockedSuccessorScenario(s, false),
                   false);
  }
  return pass;
}

}  // namespace

int
main(int argc, char **argv)
{
  CLI::App app{"Linearizability checks for the bundled structures"};
  std::string suite = "random";
  std::string ds = "all";
  std::uint64_t seeds = 100;
  std::uint64_t first_seed = 1;
  app.add_option("--suite", suite, "random, scenarios or sequential")->capture_default_str();
  app.add_option("--ds", ds, "list, skiplist, bst or all")->capture_default_str();
  app.add_option("--seeds", seeds, "Histories (random) or traces (sequential)")->capture_default_str();
  app.add_option("--first-seed", first_seed, "First seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  std::vector<Structure> targets;
  if (ds == "all") {
    targets = {Structure::kList, Structure::kSkipList, Structure::kTree};
  } else if (auto s = harness::ParseStructure(ds)) {
    targets = {*s};
  } else {
    std::cerr << "error: --ds: expected list, skiplist, bst or all\n";
    return 2;
  }

  bool pass = true;
  for (auto s : targets) {
    if (suite == "random") {
      pass &= RunRandom(s, seeds, first_seed);
    } else if (suite == "scenarios") {
      std::cout << "== " << harness::StructureName(s) << '\n';
      pass &= RunScenarios(s);
    } else if (suite == "sequential") {
      const Key keys = s == Structure::kTree ? 32 : 64;
      auto out = SequentialReplay(s, keys, static_cast<unsigned>(seeds), 200, first_seed);
      std::cout << harness::StructureName(s) << ": " << out.queries << " range queries, "
                << (out.ok ? "all match" : out.detail) << '\n';
      pass &= out.ok;
    } else {
      std::cerr << "error: --suite: expected random, scenarios or sequential\n";
      return 2;
    }
  }
  return pass ? 0 : 1;
}
