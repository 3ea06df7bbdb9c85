#include "topogen/des.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace topogen::des {

ComponentId Simulator::add(std::unique_ptr<Component> component) {
  const auto id = static_cast<ComponentId>(components_.size());
  component->id_ = id;
  wiring_.emplace_back(component->output_ports().size());
  components_.push_back(std::move(component));
  return id;
}

void Simulator::connect(ComponentId from, PortId output, ComponentId to, PortId input, SimTime delay) {
  if (from >= components_.size() || to >= components_.size())
    throw std::invalid_argument("connect: unknown component");
  if (output >= components_[from]->output_ports().size())
    throw std::invalid_argument("connect: " + components_[from]->name() + " has no output port " +
                                std::to_string(output));
  if (input >= components_[to]->input_ports().size())
    throw std::invalid_argument("connect: " + components_[to]->name() + " has no input port " +
                                std::to_string(input));
  if (!(delay >= 0)) throw std::invalid_argument("connect: negative wire delay");
  auto& wire = wiring_[from][output];
  if (wire.connected)
    throw std::invalid_argument("connect: output " + components_[from]->output_ports()[output] + " of " +
                                components_[from]->name() + " is already wired");
  wire = {to, input, delay, true};
}

EventId Simulator::schedule(SimTime delay, ComponentId target, PortId port, Message payload) {
  if (!(delay >= 0)) throw std::invalid_argument("schedule: negative delay " + std::to_string(delay));
  if (target >= components_.size()) throw std::invalid_argument("schedule: unknown component");
  const EventId seq = next_sequence_++;
  queue_.push(Event{now_ + delay, seq, target, port, payload});
  return seq;
}

EventId Simulator::send(ComponentId from, PortId output, Message payload, SimTime extra) {
  const auto& wire = wiring_.at(from).at(output);
  if (!wire.connected)
    throw SimulationError(components_[from]->name() + ": output " + components_[from]->output_ports()[output] +
                          " is not wired");
  return schedule(wire.delay + extra, wire.target, wire.port, payload);
}

RunStats Simulator::run_until(SimTime horizon) {
  if (!(horizon >= 0)) throw std::invalid_argument("run_until: negative horizon");
  RunStats stats;
  while (!queue_.empty()) {
    if (!warmed_up_ && warmup_ > 0 && queue_.top().time >= warmup_) {
      for (auto& c : components_) c->reset_statistics();
      warmed_up_ = true;
    }
    if (queue_.top().time > horizon) {
      now_ = horizon;
      break;
    }
    const Event ev = queue_.top();
    queue_.pop();
    now_ = ev.time;
    Component& target = *components_[ev.target];
    if (trace_) {
      nlohmann::json line = {{"time", ev.time},
                             {"component", target.name()},
                             {"port", ev.port == kSelf ? std::string("self") : target.input_ports().at(ev.port)},
                             {"payload", target.describe(ev.payload)}};
      *trace_ << line.dump() << '\n';
    }
    try {
      target.handle(*this, ev);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "simulation aborted at t=" << now_ << " in component '" << target.name() << "' (id " << ev.target
          << "): " << e.what();
      throw SimulationError(msg.str());
    }
    ++stats.events;
  }
  stats.end_time = now_;
  for (const auto& c : components_) c->collect(stats.statistics);
  return stats;
}

}  // namespace topogen::des
