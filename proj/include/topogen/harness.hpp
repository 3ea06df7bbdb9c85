#pragma once

// Experiment plumbing: exhaustive oracles, repeated runs driven by a JSON config, and report
// files derived from the run logs.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "topogen/ga.hpp"
#include "topogen/loop_layout.hpp"
#include "topogen/nn_ga.hpp"
#include "topogen/run_log.hpp"

namespace topogen::harness {

/// Invalid or inconsistent experiment configuration. `where` locates the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

struct OracleEntry {
  DesignId design_id = 0;
  std::string label;
  double fitness = 0;
  std::size_t rank = 0;  // 1 = best; ties broken by design id
};

struct Oracle {
  Sense sense = Sense::minimize;
  std::string label_column = "label";
  std::string value_column = "fitness";
  std::vector<OracleEntry> entries;  // indexed by design id

  std::size_t size() const noexcept { return entries.size(); }
  DesignId best() const;
  std::size_t rank_of(DesignId id) const { return entries.at(id).rank; }
  /// Designs other than the rank-1 design with exactly its fitness.
  std::size_t ties_at_best() const;
  /// Designs whose fitness equals at least one other design's.
  std::size_t tied_designs() const;
};

/// Evaluates every design once and ranks them under the evaluator's sense.
Oracle exhaustive(const DesignSpace& space, const Evaluator& evaluator,
                  const std::function<std::string(DesignId)>& label, std::size_t threads = 1);

/// Ranks a precomputed fitness vector.
Oracle rank_table(std::vector<double> fitness, Sense sense, const std::function<std::string(DesignId)>& label);

void write_oracle_csv(std::ostream& out, const Oracle& oracle);
Oracle read_oracle_csv(const std::filesystem::path& path, Sense sense);

std::string permutation_label(const loop::LoopDesign& layout);
Oracle loop_oracle(const loop::LoopBenchmark& bench, const loop::LoopParams& params, std::uint64_t master_seed,
                   std::size_t threads = 1);

/// Reads a design_id,fitness CSV covering ids 0..n-1.
std::vector<double> read_fitness_table(const std::filesystem::path& path, std::size_t designs);

enum class Algorithm { ga, nn_ga };

struct ExperimentConfig {
  // benchmark
  std::string benchmark = "loop";  // "loop" | "external"
  int machines = 6;
  loop::LoopParams simulation;
  std::filesystem::path design_space;
  std::filesystem::path fitness_table;
  Sense sense = Sense::minimize;
  std::optional<std::filesystem::path> oracle;

  Algorithm algorithm = Algorithm::ga;
  GaParams ga;
  NnGaParams nn;
  std::size_t runs = 30;
  std::uint64_t master_seed = 1;
  Termination termination;
  bool stop_at_optimum = true;
  std::filesystem::path output_dir = "out";
  std::size_t threads = 1;
  bool log_wall_time = false;

  /// Parses the JSON config. Relative input paths resolve against `base_dir`.
  static ExperimentConfig from_json(const std::string& text, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string to_json() const;
  void validate() const;
};

std::uint64_t run_seed(std::uint64_t master_seed, std::size_t run_index);

struct ExperimentResult {
  std::vector<runlog::RunSummary> runs;
  runlog::Aggregate aggregate;
  std::size_t design_space_size = 0;
};

/// Runs the experiment and writes config.json, oracle.csv, run_<k>.jsonl, summary.csv and
/// aggregate.json into the output directory. `progress` is told about each finished run.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::function<void(const runlog::RunSummary&)>& progress = {});

std::string aggregate_json(const runlog::Aggregate& a, std::size_t design_space_size);

struct ExperimentReport {
  std::filesystem::path dir;
  std::string algorithm;
  std::string benchmark;
  std::size_t design_space_size = 0;
  std::vector<runlog::RunSummary> runs;
  runlog::Aggregate aggregate;
};

/// Recomputes summaries from the run logs of one experiment directory and writes progress.csv.
ExperimentReport report_experiment(const std::filesystem::path& dir);

/// Reports `dir` and each immediate subdirectory that holds an experiment, then writes
/// scalability.csv into `dir`.
std::vector<ExperimentReport> report(const std::filesystem::path& dir);

}  // namespace topogen::harness
