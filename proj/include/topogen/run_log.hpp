#pragma once

// Per-run JSONL logs, run summaries and their aggregate statistics.

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "topogen/ga.hpp"
#include "topogen/nn_ga.hpp"

namespace topogen::runlog {

struct RunSummary {
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  bool found_optimum = false;
  std::optional<std::size_t> evaluations_to_optimum;  // present iff found_optimum
  double best_fitness = 0;
  DesignId best_design = 0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::string stop_reason;
  double wall_time = 0;  // seconds
};

/// One JSON object per line: evaluation records as they happen, per-iteration surrogate records,
/// and a closing summary. Wall-clock values are written only when `with_wall_time` is set, so
/// logs stay byte-identical across re-runs by default.
class JsonlWriter {
 public:
  JsonlWriter(std::ostream& out, bool with_wall_time = false) : out_(out), wall_(with_wall_time) {}

  void evaluation(const EvaluationRecord& rec, std::size_t cumulative);
  void nn_iteration(const NnIterationRecord& rec);
  void summary(const RunSummary& s);

 private:
  std::ostream& out_;
  bool wall_;
};

struct LoggedEvaluation {
  DesignId design_id = 0;
  std::size_t iteration = 0;
  double fitness = 0;
  std::size_t cumulative = 0;
};

struct ParsedRun {
  std::vector<LoggedEvaluation> evaluations;
  std::vector<NnIterationRecord> iterations;
  std::optional<RunSummary> summary;
};

/// Reads a log written by JsonlWriter. Throws std::runtime_error with the line number on malformed input.
ParsedRun parse_run_log(std::istream& in);

struct Aggregate {
  std::size_t runs = 0;
  std::size_t successes = 0;
  double success_fraction = 0;
  std::optional<double> mean_evaluations;  // over successful runs
  std::optional<double> std_evaluations;   // sample standard deviation; 0 for a single success
};

Aggregate aggregate(std::span<const RunSummary> runs);

std::string summary_csv(std::span<const RunSummary> runs);

}  // namespace topogen::runlog
