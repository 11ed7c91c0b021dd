#pragma once

// End-to-end checks of the library's headline claims, one line per check.
// Shared by the acceptance test binary and the `selftest` subcommand.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace berkson {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double time_limit = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240601;
  std::size_t trials = 500;
  /// Artifacts (CSV, JSON) are written here when set.
  std::optional<std::filesystem::path> out_dir;
  /// Empty means all criteria.
  std::set<int> only;
};

struct AcceptanceRun {
  std::vector<CriterionResult> results;
  /// File name -> bytes; identical across runs with the same options.
  std::map<std::string, std::string> artifacts;

  bool all_pass() const;
};

/// Runs the criteria in order, printing one PASS/FAIL line per criterion to `log`.
AcceptanceRun run_acceptance(const AcceptanceOptions& options, std::ostream& log);

}  // namespace berkson
