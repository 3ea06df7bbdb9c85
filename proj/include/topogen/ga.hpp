#pragma once

// Unassisted genetic algorithm: recombine -> mutate -> evaluate (new designs only) -> select,
// with an archive E holding every simulated design.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "topogen/genetic_ops.hpp"
#include "topogen/topology.hpp"

namespace topogen {

struct GaParams {
  double selection_pressure = 1.3;      // α_s
  double mutation_pressure = 1.3;       // α_m
  double recombination_pressure = 2.0;  // α_r
  std::size_t population_size = 30;     // β
  std::size_t candidate_pool_size = 20000;  // δ
  std::size_t mutation_count = 30;      // γ_m
  std::size_t recombination_count = 10;  // γ_r

  void validate() const;
  VariationConfig variation() const;
};

struct EvaluationRecord {
  DesignId design_id = 0;
  Chromosome chromosome;
  double fitness = 0;
  std::size_t evaluated_at_iteration = 0;
  std::chrono::duration<double> wall_time{0};
};

struct Termination {
  std::optional<std::size_t> max_iterations = 1000;
  std::optional<std::size_t> max_evaluations;
  std::optional<double> target_fitness;     // reached when a simulated fitness is at least this good
  std::optional<DesignId> target_design;    // reached when this design is simulated
  std::optional<std::size_t> stagnation_window;

  void validate() const;
};

/// Simulation-backed objective. Must be safe to call concurrently for distinct designs.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual double evaluate(DesignId design) const = 0;
  virtual Sense sense() const = 0;
};

/// Wraps a callable; handy for tests and fitness tables.
class FunctionEvaluator final : public Evaluator {
 public:
  FunctionEvaluator(std::function<double(DesignId)> fn, Sense sense) : fn_(std::move(fn)), sense_(sense) {}
  double evaluate(DesignId design) const override { return fn_(design); }
  Sense sense() const override { return sense_; }

 private:
  std::function<double(DesignId)> fn_;
  Sense sense_;
};

/// The set E. One record per design id, in evaluation order.
class Archive {
 public:
  bool contains(DesignId id) const { return index_.contains(id); }
  const EvaluationRecord& at(DesignId id) const { return records_.at(index_.at(id)); }
  double fitness(DesignId id) const { return at(id).fitness; }
  std::size_t size() const noexcept { return records_.size(); }
  const std::vector<EvaluationRecord>& records() const noexcept { return records_; }
  void add(EvaluationRecord record);
  /// Best record under `sense`; earliest wins ties. Archive must be nonempty.
  const EvaluationRecord& best(Sense sense) const;

 private:
  std::vector<EvaluationRecord> records_;
  std::unordered_map<DesignId, std::size_t> index_;
  std::size_t best_min_ = 0;
  std::size_t best_max_ = 0;
};

/// Observer hooks; the run log is written through these.
struct RunHooks {
  std::function<void(const EvaluationRecord&, std::size_t cumulative)> on_evaluation;
  std::function<void(std::size_t iteration, double best_fitness)> on_iteration;
};

struct RunOptions {
  std::size_t threads = 1;  // concurrent evaluations per batch
  RunHooks hooks;
};

struct GaResult {
  std::vector<EvaluationRecord> archive;
  std::vector<double> history;  // best fitness after each iteration; [0] = initial population
  std::size_t iterations = 0;
  bool target_reached = false;
  std::optional<std::size_t> evaluations_to_target;
  std::string stop_reason;
};

/// Thrown when the evaluator fails; carries everything evaluated before the failure.
class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, GaResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const GaResult& partial() const noexcept { return partial_; }

 private:
  GaResult partial_;
};

GaResult run_ga(const DesignSpace& space, const Evaluator& evaluator, const GaParams& params,
                const Termination& termination, std::uint64_t seed, const RunOptions& options = {});

namespace detail {

/// Shared bookkeeping between the unassisted and assisted drivers.
class RunState {
 public:
  RunState(const DesignSpace& space, const Evaluator& evaluator, const Termination& termination,
           const RunOptions& options);

  /// Simulates the designs of `ids` that are not yet in E, in order, stopping early when a
  /// termination criterion fires. Returns the number simulated.
  std::size_t evaluate(const std::vector<DesignId>& ids, std::size_t iteration);

  /// Records end-of-iteration bookkeeping and returns true if the run must stop.
  bool finish_iteration(std::size_t iteration);

  bool stop_requested() const noexcept { return !stop_reason_.empty(); }
  const Archive& archive() const noexcept { return archive_; }
  Sense sense() const noexcept { return sense_; }
  GaResult result() const;

 private:
  bool check_budget_and_target(const EvaluationRecord& rec);

  const DesignSpace& space_;
  const Evaluator& evaluator_;
  Termination termination_;
  RunOptions options_;
  Sense sense_;
  Archive archive_;
  std::vector<double> history_;
  std::size_t iterations_ = 0;
  std::size_t since_improvement_ = 0;
  std::optional<std::size_t> evaluations_to_target_;
  bool target_reached_ = false;
  std::string stop_reason_;
};

/// Unique ids in first-appearance order.
std::vector<DesignId> unique_in_order(const std::vector<DesignId>& ids);

/// Next population: rank-select `count` of `pool` on archived fitness with pressure α_s.
std::vector<DesignId> select_population(const std::vector<DesignId>& pool, const Archive& archive, Sense sense,
                                        double pressure, std::size_t count, Rng& rng);

}  // namespace detail

}  // namespace topogen
