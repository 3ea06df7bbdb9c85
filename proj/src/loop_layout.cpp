#include "topogen/loop_layout.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <string>

namespace topogen::loop {

namespace {

constexpr std::uint32_t kArrival = 1;  // next part enters at the load/unload station
constexpr std::uint32_t kInject = 2;   // hand-placed part enters
constexpr std::uint32_t kPart = 3;     // part travelling on the loop
constexpr std::uint32_t kDone = 4;     // service completed

constexpr des::PortId kLoopIn = 0;
constexpr des::PortId kLoopOut = 0;

const char* kLoadUnloadName = "LU";

}  // namespace

void LoopDesign::validate() const {
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != static_cast<int>(i) + 1)
      throw std::invalid_argument("loop design is not a permutation of 1..n");
  if (order.empty()) throw std::invalid_argument("loop design has no machines");
}

std::vector<int> ProcessingPlan::steps() const {
  std::vector<int> s(size());
  std::iota(s.begin(), s.end(), first);
  return s;
}

void LoopParams::validate() const {
  if (!(interarrival > 0) || !(processing_time > 0) || !(transport_time > 0) || !(horizon > 0))
    throw std::invalid_argument("loop timing parameters must be positive");
  if (buffer_capacity == 0) throw std::invalid_argument("loop buffer capacity must be positive");
  if (replications == 0) throw std::invalid_argument("loop replications must be positive");
}

std::vector<ProcessingPlan> enumerate_plans(int n) {
  if (n < 1) throw std::invalid_argument("loop needs at least one machine");
  std::vector<ProcessingPlan> plans;
  plans.reserve(static_cast<std::size_t>(n * (n + 1) / 2));
  for (int i = 1; i <= n; ++i)
    for (int j = i; j <= n; ++j) plans.push_back({i, j});
  return plans;
}

LoopBenchmark generate_design_space(int n) {
  if (n < 1) throw std::invalid_argument("loop needs at least one machine");
  std::vector<ComponentType> types = {
      {"LoadUnload", {"loop_in"}, {"loop_out"}},
      {"Machine", {"loop_in"}, {"loop_out"}},
  };
  std::vector<ComponentInstance> instances;
  instances.push_back({kLoadUnloadName, 0});
  for (int k = 1; k <= n; ++k) instances.push_back({"M" + std::to_string(k), 1});

  // Instance k has exactly one output and one input port, so port indices equal instance indices.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 1);
  std::vector<Design> designs;
  std::vector<LoopDesign> layouts;
  do {
    Design d;
    d.nodes.resize(static_cast<std::size_t>(n) + 1);
    std::iota(d.nodes.begin(), d.nodes.end(), 0U);
    std::uint32_t prev = 0;
    for (int k : order) {
      d.edges.push_back({prev, static_cast<std::uint32_t>(k)});
      prev = static_cast<std::uint32_t>(k);
    }
    d.edges.push_back({prev, 0});
    designs.push_back(std::move(d));
    layouts.push_back({order});
  } while (std::next_permutation(order.begin(), order.end()));

  return {n, DesignSpace(std::move(types), std::move(instances), std::move(designs)), std::move(layouts)};
}

LoopDesign layout_from_design(const DesignSpace& space, const Design& design) {
  const auto lu = space.instance_index(kLoadUnloadName);
  if (!lu) throw std::invalid_argument("design space has no load/unload station");
  std::vector<std::size_t> next(space.instances().size(), space.instances().size());
  for (const auto& e : design.edges)
    next[space.output_ports()[e.output].instance] = space.input_ports()[e.input].instance;
  LoopDesign out;
  std::size_t at = next[*lu];
  while (at != *lu) {
    if (at >= space.instances().size() || out.order.size() > space.instances().size())
      throw std::invalid_argument("design is not a single loop through the load/unload station");
    out.order.push_back(std::stoi(space.instances()[at].id.substr(1)));
    at = next[at];
  }
  out.validate();
  return out;
}

class Machine;

struct LoopModel::State {
  LoopParams params;
  std::vector<ProcessingPlan> plans;
  std::vector<PartRecord> parts;
  des::Simulator sim;
  std::vector<Machine*> machines;
  bool arrivals = true;
  bool started = false;

  State(const LoopParams& p, int n, std::uint64_t seed) : params(p), plans(enumerate_plans(n)), sim(seed) {}
};

namespace {

class LoadUnload final : public des::Component {
 public:
  explicit LoadUnload(LoopModel::State& st) : Component(kLoadUnloadName, {"loop_in"}, {"loop_out"}), st_(st) {}

  void handle(des::Simulator& sim, const des::Event& ev) override;
  std::string describe(const des::Message& m) const override;
  void collect(des::Statistics& stats) const override;

 private:
  LoopModel::State& st_;
};

}  // namespace

class Machine final : public des::Component {
 public:
  Machine(LoopModel::State& st, int machine)
      : Component("M" + std::to_string(machine), {"loop_in"}, {"loop_out"}), st_(st), machine_(machine) {}

  void handle(des::Simulator& sim, const des::Event& ev) override {
    if (ev.payload.tag == kDone) {
      finish(sim);
      return;
    }
    PartRecord& part = st_.parts.at(ev.payload.item);
    const bool wanted = part.next_step < part.plan.size() &&
                        part.plan.first + static_cast<int>(part.next_step) == machine_;
    if (!wanted) {
      sim.send(id(), kLoopOut, ev.payload);
    } else if (!busy_) {
      start(sim, ev.payload.item);
    } else if (queue_.size() < st_.params.buffer_capacity) {
      queue_.push_back(ev.payload.item);
      stats_.max_queue = std::max(stats_.max_queue, queue_.size());
    } else {
      ++stats_.overflows;
      sim.send(id(), kLoopOut, ev.payload);
    }
  }

  std::string describe(const des::Message& m) const override {
    return (m.tag == kDone ? "done:" : "part:") + std::to_string(m.item);
  }

  void collect(des::Statistics& stats) const override {
    stats[name() + ".served"] = static_cast<double>(stats_.served);
    stats[name() + ".busy_time"] = stats_.busy_time;
  }

  const MachineStats& stats() const noexcept { return stats_; }

 private:
  void start(des::Simulator& sim, std::uint32_t part) {
    busy_ = true;
    in_service_ = part;
    sim.schedule_self(st_.params.processing_time, id(), {kDone, part});
  }

  void finish(des::Simulator& sim) {
    PartRecord& part = st_.parts.at(in_service_);
    ++part.next_step;
    part.served.push_back(machine_);
    ++stats_.served;
    stats_.busy_time += st_.params.processing_time;
    busy_ = false;
    sim.send(id(), kLoopOut, {kPart, in_service_});
    if (!queue_.empty()) {
      const auto next = queue_.front();
      queue_.pop_front();
      start(sim, next);
    }
  }

  LoopModel::State& st_;
  int machine_;
  bool busy_ = false;
  std::uint32_t in_service_ = 0;
  std::deque<std::uint32_t> queue_;
  MachineStats stats_;
};

namespace {

void LoadUnload::handle(des::Simulator& sim, const des::Event& ev) {
  switch (ev.payload.tag) {
    case kArrival: {
      std::uniform_int_distribution<std::size_t> pick(0, st_.plans.size() - 1);
      PartRecord part;
      part.arrival_time = sim.now();
      part.plan = st_.plans[pick(sim.rng())];
      const auto index = static_cast<std::uint32_t>(st_.parts.size());
      st_.parts.push_back(std::move(part));
      if (sim.now() + st_.params.interarrival <= st_.params.horizon)
        sim.schedule_self(st_.params.interarrival, id(), {kArrival, 0});
      sim.send(id(), kLoopOut, {kPart, index});
      break;
    }
    case kInject: {
      st_.parts.at(ev.payload.item).arrival_time = sim.now();
      sim.send(id(), kLoopOut, {kPart, ev.payload.item});
      break;
    }
    case kPart: {
      PartRecord& part = st_.parts.at(ev.payload.item);
      ++part.laps;
      if (part.next_step >= part.plan.size())
        part.exit_time = sim.now();
      else
        sim.send(id(), kLoopOut, ev.payload);
      break;
    }
    default:
      throw std::logic_error("load/unload station received unknown message tag " + std::to_string(ev.payload.tag));
  }
}

std::string LoadUnload::describe(const des::Message& m) const {
  switch (m.tag) {
    case kArrival:
      return "arrival";
    case kInject:
      return "inject:" + std::to_string(m.item);
    default:
      return "part:" + std::to_string(m.item);
  }
}

void LoadUnload::collect(des::Statistics& stats) const {
  double exited = 0, total = 0;
  for (const auto& p : st_.parts)
    if (p.exit_time) {
      exited += 1;
      total += *p.exit_time - p.arrival_time;
    }
  stats["parts_entered"] = static_cast<double>(st_.parts.size());
  stats["parts_exited"] = exited;
  if (exited > 0) stats["mean_cycle_time"] = total / exited;
}

}  // namespace

LoopModel::LoopModel(const LoopDesign& design, const LoopParams& params, std::uint64_t seed) {
  design.validate();
  params.validate();
  const int n = static_cast<int>(design.machines());
  state_ = std::make_unique<State>(params, n, seed);
  auto& sim = state_->sim;

  const auto lu = sim.add(std::make_unique<LoadUnload>(*state_));
  std::vector<des::ComponentId> by_machine(static_cast<std::size_t>(n) + 1);
  for (int k = 1; k <= n; ++k) {
    auto owned = std::make_unique<Machine>(*state_, k);
    state_->machines.push_back(owned.get());
    by_machine[static_cast<std::size_t>(k)] = sim.add(std::move(owned));
  }
  des::ComponentId prev = lu;
  for (int k : design.order) {
    sim.connect(prev, kLoopOut, by_machine[static_cast<std::size_t>(k)], kLoopIn, params.transport_time);
    prev = by_machine[static_cast<std::size_t>(k)];
  }
  sim.connect(prev, kLoopOut, lu, kLoopIn, params.transport_time);
}

LoopModel::~LoopModel() = default;
LoopModel::LoopModel(LoopModel&&) noexcept = default;
LoopModel& LoopModel::operator=(LoopModel&&) noexcept = default;

void LoopModel::inject_part(double time, std::optional<ProcessingPlan> plan) {
  if (state_->started) throw std::logic_error("inject_part after the model started running");
  if (!(time >= 0)) throw std::invalid_argument("inject_part: negative time");
  PartRecord part;
  part.arrival_time = time;
  if (plan) {
    if (plan->first < 1 || plan->last < plan->first ||
        plan->last > static_cast<int>(state_->machines.size()))
      throw std::invalid_argument("inject_part: plan outside the blueprint");
    part.plan = *plan;
  } else {
    part.degenerate = true;
    part.plan = {1, 0};
  }
  const auto index = static_cast<std::uint32_t>(state_->parts.size());
  state_->parts.push_back(std::move(part));
  state_->sim.schedule_self(time, 0, {kInject, index});
}

void LoopModel::disable_arrivals() {
  if (state_->started) throw std::logic_error("disable_arrivals after the model started running");
  state_->arrivals = false;
}

void LoopModel::set_trace(std::ostream* out) { state_->sim.set_trace(out); }

des::RunStats LoopModel::run() { return run_until(state_->params.horizon); }

des::RunStats LoopModel::run_until(double horizon) {
  if (!state_->started) {
    state_->started = true;
    if (state_->arrivals) state_->sim.schedule_self(0, 0, {kArrival, 0});
  }
  return state_->sim.run_until(horizon);
}

const std::vector<PartRecord>& LoopModel::parts() const { return state_->parts; }

std::vector<MachineStats> LoopModel::machine_stats() const {
  std::vector<MachineStats> out;
  for (const auto* m : state_->machines) out.push_back(m->stats());
  return out;
}

std::size_t LoopModel::parts_in_system() const {
  std::size_t n = 0;
  for (const auto& p : state_->parts)
    if (!p.exit_time && p.arrival_time <= state_->sim.now()) ++n;
  return n;
}

std::optional<double> LoopModel::mean_cycle_time() const {
  double total = 0;
  std::size_t n = 0;
  for (const auto& p : state_->parts)
    if (p.exit_time) {
      total += *p.exit_time - p.arrival_time;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return total / static_cast<double>(n);
}

LoopModel build_model(const LoopDesign& design, const LoopParams& params, std::uint64_t seed) {
  return LoopModel(design, params, seed);
}

double fitness(const LoopDesign& design, const LoopParams& params, std::uint64_t seed) {
  params.validate();
  double sum = 0;
  for (std::size_t r = 0; r < params.replications; ++r) {
    LoopModel model(design, params, r == 0 ? seed : derive_seed({seed, r}));
    model.run();
    const auto mean = model.mean_cycle_time();
    if (!mean) throw std::runtime_error("no part completed its plan within the horizon");
    sum += *mean;
  }
  return sum / static_cast<double>(params.replications);
}

std::uint64_t benchmark_seed(std::uint64_t master_seed, int machines) {
  return derive_seed({master_seed, static_cast<std::uint64_t>(machines), tag(StreamTag::simulation)});
}

LoopEvaluator::LoopEvaluator(const LoopBenchmark& bench, LoopParams params, std::uint64_t master_seed)
    : bench_(bench), params_(params), seed_(benchmark_seed(master_seed, bench.machines)) {
  params_.validate();
}

double LoopEvaluator::evaluate(DesignId design) const { return fitness(bench_.layouts.at(design), params_, seed_); }

}  // namespace topogen::loop
