#pragma once

// Config-driven experiment runner. One INI file per run; outputs are CSV
// tables, report.txt and summary.json in the output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rkint::cli {

struct RunOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;    // overrides [experiment] seed
  std::optional<unsigned> threads;      // overrides [experiment] threads
  bool quiet = false;
};

struct Check {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct RunResult {
  std::string kind;
  std::uint64_t seed = 0;
  std::vector<Check> checks;
  bool pass() const;
};

const std::vector<std::string>& experiment_kinds();

/// Throws rkint::Error (CONFIG_INVALID for bad configs, module errors
/// otherwise).
RunResult run_experiment(const std::string& kind, const RunOptions& options);

/// Full command line entry point; returns the process exit code.
int main(int argc, char** argv);

}  // namespace rkint::cli
