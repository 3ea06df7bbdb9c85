#pragma once

// Minimal deterministic discrete-event simulation kernel. Components exchange messages through
// wired ports; equal-time events run in scheduling order.

#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "topogen/rng.hpp"

namespace topogen::des {

using SimTime = double;
using ComponentId = std::uint32_t;
using PortId = std::uint32_t;
using EventId = std::uint64_t;

/// Port value for events that a component schedules for itself.
inline constexpr PortId kSelf = ~PortId{0};

struct Message {
  std::uint32_t tag = 0;
  std::uint32_t item = 0;
};

struct Event {
  SimTime time = 0;
  EventId sequence = 0;
  ComponentId target = 0;
  PortId port = kSelf;
  Message payload;
};

using Statistics = std::map<std::string, double>;

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Simulator;

class Component {
 public:
  Component(std::string name, std::vector<std::string> inputs, std::vector<std::string> outputs)
      : name_(std::move(name)), inputs_(std::move(inputs)), outputs_(std::move(outputs)) {}
  virtual ~Component() = default;

  virtual void handle(Simulator& sim, const Event& event) = 0;
  /// Called at the warm-up boundary.
  virtual void reset_statistics() {}
  virtual void collect(Statistics&) const {}
  /// Short label of a payload for trace dumps.
  virtual std::string describe(const Message& m) const { return std::to_string(m.tag); }

  const std::string& name() const noexcept { return name_; }
  ComponentId id() const noexcept { return id_; }
  const std::vector<std::string>& input_ports() const noexcept { return inputs_; }
  const std::vector<std::string>& output_ports() const noexcept { return outputs_; }

 private:
  friend class Simulator;
  std::string name_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  ComponentId id_ = 0;
};

struct RunStats {
  std::uint64_t events = 0;
  SimTime end_time = 0;
  Statistics statistics;
};

/// A SimModel: components, output->input wiring, the future-event list, a clock and one RNG.
/// Strictly single-threaded.
class Simulator {
 public:
  explicit Simulator(std::uint64_t seed = 0) : rng_(seed) {}

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  ComponentId add(std::unique_ptr<Component> component);

  template <class C, class... Args>
  C& emplace(Args&&... args) {
    auto owned = std::make_unique<C>(std::forward<Args>(args)...);
    C& ref = *owned;
    add(std::move(owned));
    return ref;
  }

  /// Wires an output port to an input port with a fixed transfer delay. Each output feeds one input.
  void connect(ComponentId from, PortId output, ComponentId to, PortId input, SimTime delay = 0);

  EventId schedule(SimTime delay, ComponentId target, PortId port, Message payload);
  EventId schedule_self(SimTime delay, ComponentId target, Message payload) {
    return schedule(delay, target, kSelf, payload);
  }
  /// Emits `payload` on an output port; it arrives after the wire delay plus `extra`.
  EventId send(ComponentId from, PortId output, Message payload, SimTime extra = 0);

  /// Dispatches events in (time, sequence) order until the queue empties or the next event lies
  /// beyond `horizon`.
  RunStats run_until(SimTime horizon);

  SimTime now() const noexcept { return now_; }
  Rng& rng() noexcept { return rng_; }
  std::size_t component_count() const noexcept { return components_.size(); }
  Component& component(ComponentId id) { return *components_.at(id); }
  std::size_t pending() const noexcept { return queue_.size(); }

  void set_warmup(SimTime t) { warmup_ = t; }
  /// JSONL event trace: {"time":..,"component":..,"port":..,"payload":..} per dispatched event.
  void set_trace(std::ostream* out) { trace_ = out; }

 private:
  struct Wire {
    ComponentId target = 0;
    PortId port = 0;
    SimTime delay = 0;
    bool connected = false;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const noexcept {
      if (a.time != b.time) return a.time > b.time;
      return a.sequence > b.sequence;
    }
  };

  std::vector<std::unique_ptr<Component>> components_;
  std::vector<std::vector<Wire>> wiring_;  // [component][output port]
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  SimTime now_ = 0;
  EventId next_sequence_ = 0;
  Rng rng_;
  SimTime warmup_ = 0;
  bool warmed_up_ = false;
  std::ostream* trace_ = nullptr;
};

}  // namespace topogen::des
