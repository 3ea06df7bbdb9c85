#pragma once

// n-machine unidirectional loop layout. A load/unload station sits at loop position 0;
// machines occupy positions 1..n in the order given by the design. Parts arrive at fixed
// intervals, receive a uniformly random contiguous sub-plan of the blueprint [1..n], and
// circulate until every step of their plan has been served.

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "topogen/des.hpp"
#include "topogen/ga.hpp"
#include "topogen/topology.hpp"

namespace topogen::loop {

/// Station order around the loop after the load/unload station: a permutation of 1..n.
struct LoopDesign {
  std::vector<int> order;

  std::size_t machines() const noexcept { return order.size(); }
  void validate() const;
  friend bool operator==(const LoopDesign&, const LoopDesign&) = default;
};

/// Contiguous blueprint steps first..last (1-based, inclusive).
struct ProcessingPlan {
  int first = 1;
  int last = 1;

  std::size_t size() const noexcept { return static_cast<std::size_t>(last - first + 1); }
  std::vector<int> steps() const;
  friend bool operator==(const ProcessingPlan&, const ProcessingPlan&) = default;
};

struct LoopParams {
  double interarrival = 4.0;
  double processing_time = 5.0;
  double transport_time = 1.0;   // per station-to-station hop
  std::size_t buffer_capacity = 2;  // waiting slots, excluding the part in service
  double horizon = 7200.0;
  std::size_t replications = 1;

  void validate() const;
};

struct PartRecord {
  double arrival_time = 0;
  std::optional<double> exit_time;
  ProcessingPlan plan;
  std::size_t next_step = 0;   // index into plan steps still to be served
  std::size_t laps = 0;        // visits to the load/unload station after entry
  std::vector<int> served;     // machines that served this part, in order
  bool degenerate = false;     // injected with an empty plan
};

/// All n(n+1)/2 plans, ordered by (first, last).
std::vector<ProcessingPlan> enumerate_plans(int n);

/// F for the n-machine loop: all n! station orders as port graphs, in lexicographic order.
struct LoopBenchmark {
  int machines = 0;
  DesignSpace space;
  std::vector<LoopDesign> layouts;  // layouts[id] is the station order of design id
};

LoopBenchmark generate_design_space(int n);

/// Recovers the station order from a loop design's edges by walking from the load/unload station.
LoopDesign layout_from_design(const DesignSpace& space, const Design& design);

struct MachineStats {
  std::size_t served = 0;
  std::size_t max_queue = 0;
  std::size_t overflows = 0;  // parts sent around because the buffer was full
  double busy_time = 0;
};

/// A loop-layout SimModel built from station components wired like the design's port graph.
class LoopModel {
 public:
  LoopModel(const LoopDesign& design, const LoopParams& params, std::uint64_t seed);
  ~LoopModel();
  LoopModel(LoopModel&&) noexcept;
  LoopModel& operator=(LoopModel&&) noexcept;

  des::RunStats run();
  des::RunStats run_until(double horizon);

  /// Adds a part at the load/unload station at absolute time `time` with an explicit plan
  /// (nullopt = empty plan). Must be called before run.
  void inject_part(double time, std::optional<ProcessingPlan> plan);
  /// Disables the periodic arrival stream (for hand-built scenarios).
  void disable_arrivals();

  void set_trace(std::ostream* out);

  const std::vector<PartRecord>& parts() const;
  std::vector<MachineStats> machine_stats() const;
  std::size_t parts_in_system() const;
  /// Mean cycle time over parts that exited within the horizon.
  std::optional<double> mean_cycle_time() const;

  struct State;  // implementation detail shared with the station components

 private:
  std::unique_ptr<State> state_;
};

LoopModel build_model(const LoopDesign& design, const LoopParams& params, std::uint64_t seed);

/// Mean cycle time (seconds) averaged over `params.replications` runs. Throws when no part completes.
double fitness(const LoopDesign& design, const LoopParams& params, std::uint64_t seed);

/// Seed shared by every design of one benchmark so all designs see the same arrival/plan stream.
std::uint64_t benchmark_seed(std::uint64_t master_seed, int machines);

class LoopEvaluator final : public Evaluator {
 public:
  LoopEvaluator(const LoopBenchmark& bench, LoopParams params, std::uint64_t master_seed);
  double evaluate(DesignId design) const override;
  Sense sense() const override { return Sense::minimize; }

 private:
  const LoopBenchmark& bench_;
  LoopParams params_;
  std::uint64_t seed_;
};

}  // namespace topogen::loop
