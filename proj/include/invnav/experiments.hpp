#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace invnav {

/// One acceptance check: pass iff `measured relation threshold`.
struct Check {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  std::string relation;  // "<", ">", "<=", ">="
  bool pass = false;
};

Check make_check(std::string name, double measured, std::string relation,
                 double threshold);

struct ExperimentResult {
  std::string name;
  std::vector<Check> checks;
  /// Extra key=value facts for the summary (scenario constants, counts).
  std::vector<std::pair<std::string, std::string>> facts;
  std::vector<std::filesystem::path> files;

  bool passed() const;
};

struct ExperimentSpec {
  std::string name;
  std::optional<std::filesystem::path> config;  // JSON scenario overrides
  std::uint64_t seed = 0;
  std::optional<std::size_t> steps;
  std::optional<std::filesystem::path> out_dir;  // no files when empty
  unsigned threads = 0;  // 0: hardware concurrency
};

struct ExperimentInfo {
  std::string name;
  std::string claim;     // what is being reproduced
  std::string scenario;  // default constants, one "key=value" per line
};

const std::vector<ExperimentInfo>& experiment_catalog();

/// Throws UnknownExperiment.
const ExperimentInfo& describe_experiment(const std::string& name);

/// Runs the experiment, writes its CSV files and summary.txt / summary.json
/// into spec.out_dir (if set). Throws UnknownExperiment, BadConfig, or
/// std::filesystem / std::ios errors on I/O failure.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// key=value lines, one block per check.
void write_summary_text(std::ostream& os, const ExperimentResult& result);
/// {"experiment": ..., "pass": ..., "checks": [{name, measured, threshold, ...}]}
void write_summary_json(std::ostream& os, const ExperimentResult& result);

/// Runs fn(i) for i in [0, n) on `threads` workers. Results must be written to
/// per-index slots so that merging is independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn);

}  // namespace invnav

#include "invnav/detail/parallel.hpp"
