#include "bref/harness/workload.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "bref/clock.hpp"

namespace bref::harness {
namespace {

auto
ParseUnsigned(std::string_view text) -> std::optional<std::uint64_t>
{
  std::uint64_t value = 0;
  const auto *end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) return std::nullopt;
  return value;
}

}  // namespace

auto
ParseStructure(std::string_view text) -> std::optional<Structure>
{
  if (text == "list") return Structure::kList;
  if (text == "skiplist") return Structure::kSkipList;
  if (text == "bst") return Structure::kTree;
  return std::nullopt;
}

auto
StructureName(Structure s) -> std::string_view
{
  switch (s) {
    case Structure::kList: return "list";
    case Structure::kSkipList: return "skiplist";
    case Structure::kTree: return "bst";
  }
  return "?";
}

auto
ParseVariant(std::string_view text) -> std::optional<Variant>
{
  if (text == "bundle" || text == "bundled") return Variant::kBundled;
  if (text == "unsafe") return Variant::kUnsafe;
  return std::nullopt;
}

auto
VariantName(Variant v) -> std::string_view
{
  return v == Variant::kBundled ? "bundle" : "unsafe";
}

auto
ParseMix(std::string_view text) -> std::optional<Mix>
{
  std::uint64_t parts[3];
  for (int i = 0; i < 3; ++i) {
    const auto colon = text.find(':');
    if ((i < 2) != (colon != std::string_view::npos)) return std::nullopt;
    auto field = ParseUnsigned(text.substr(0, colon));
    if (!field) return std::nullopt;
    parts[i] = *field;
    text = i < 2 ? text.substr(colon + 1) : std::string_view{};
  }
  if (parts[0] + parts[1] + parts[2] != 100) return std::nullopt;
  return Mix{static_cast<unsigned>(parts[0]), static_cast<unsigned>(parts[1]),
             static_cast<unsigned>(parts[2])};
}

auto
ParseRelax(std::string_view text) -> std::optional<std::uint64_t>
{
  if (text == "inf") return kRelaxNever;
  auto value = ParseUnsigned(text);
  if (!value || *value == 0) return std::nullopt;
  return value;
}

auto
Validate(const WorkloadSpec &spec) -> std::optional<std::string>
{
  if (spec.key_range < 2) return "keys: must be at least 2";
  if (spec.key_range >= kMaxKey - 1) return "keys: too large";
  if (spec.mix.update + spec.mix.contains + spec.mix.range_query != 100) {
    return "mix: percentages must sum to 100";
  }
  if (spec.threads == 0) return "threads: must be at least 1";
  if (spec.threads > 128) return "threads: at most 128 supported";
  if (spec.ops_per_thread == 0 && !(spec.seconds > 0)) return "seconds: must be positive";
  if (spec.reclaim && spec.variant == Variant::kUnsafe) {
    return "reclaim: pruning applies to the bundle variant only";
  }
  return std::nullopt;
}

auto
CsvHeader() -> std::string
{
  return "ds,variant,keys,update_pct,contains_pct,rq_pct,rqsize,threads,seconds,ops_per_thread,"
         "seed,relax,reclaim,cleanup_delay_ms,wall_seconds,total_ops,throughput,inserts,"
         "inserts_ok,removes,removes_ok,contains,contains_hits,range_queries,rq_keys,prefill,"
         "final_size,final_clock,entries_created,entries_pruned,prune_passes,invariants_ok,"
         "size_stable";
}

auto
CsvRow(const WorkloadSpec &spec, const RunResult &r) -> std::string
{
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << StructureName(spec.structure) << ',' << VariantName(spec.variant) << ',' << spec.key_range
      << ',' << spec.mix.update << ',' << spec.mix.contains << ',' << spec.mix.range_query << ','
      << spec.rq_size << ',' << spec.threads << ',' << spec.seconds << ',' << spec.ops_per_thread
      << ',' << spec.seed << ',';
  if (spec.relax == kRelaxNever) {
    out << "inf";
  } else {
    out << spec.relax;
  }
  out << ',' << (spec.reclaim ? "on" : "off") << ',' << spec.cleanup_delay_ms << ','
      << std::fixed << std::setprecision(6) << r.wall_seconds << ',' << r.total_ops << ','
      << std::setprecision(1) << r.Throughput() << ',' << r.inserts << ','
      << r.inserts_ok << ',' << r.removes << ',' << r.removes_ok << ',' << r.contains << ','
      << r.contains_hits << ',' << r.range_queries << ',' << r.rq_keys << ',' << r.prefill << ','
      << r.final_size << ',' << r.final_clock << ',' << r.entries_created << ','
      << r.entries_pruned << ',' << r.prune_passes << ',' << (r.invariants_ok ? 1 : 0) << ','
      << (r.size_stable ? 1 : 0);
  return out.str();
}

void
AppendCsv(const std::string &path, const WorkloadSpec &spec, const RunResult &result)
{
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out{path, std::ios::app};
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  if (fresh) out << CsvHeader() << '\n';
  out << CsvRow(spec, result) << '\n';
  out.flush();
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace bref::harness
