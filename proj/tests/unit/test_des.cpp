#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "topogen/des.hpp"

using namespace topogen;
using namespace topogen::des;

namespace {

// Records (time, tag) of every delivery and can relay messages to its output.
class Probe final : public Component {
 public:
  explicit Probe(std::string name, bool relay = false)
      : Component(std::move(name), {"in"}, {"out"}), relay_(relay) {}

  void handle(Simulator& sim, const Event& ev) override {
    log.emplace_back(sim.now(), ev.payload.tag);
    if (ev.payload.tag == 99) throw std::runtime_error("bad payload");
    if (relay_ && ev.port != kSelf) sim.send(id(), 0, ev.payload);
  }
  void collect(Statistics& s) const override { s[name() + ".seen"] = static_cast<double>(log.size()); }
  void reset_statistics() override { log.clear(); }

  std::vector<std::pair<SimTime, std::uint32_t>> log;

 private:
  bool relay_;
};

}  // namespace

TEST_CASE("empty simulator") {
  Simulator sim;
  const auto stats = sim.run_until(100);
  CHECK(stats.events == 0);
  CHECK(stats.statistics.empty());
}

TEST_CASE("event ordering") {
  Simulator sim;
  auto& p = sim.emplace<Probe>("p");
  sim.schedule_self(3, p.id(), {1, 0});
  sim.schedule_self(1, p.id(), {2, 0});
  sim.schedule_self(3, p.id(), {3, 0});
  sim.schedule_self(0, p.id(), {4, 0});
  sim.run_until(10);
  const std::vector<std::pair<SimTime, std::uint32_t>> expected = {{0, 4}, {1, 2}, {3, 1}, {3, 3}};
  CHECK(p.log == expected);
}

TEST_CASE("zero delay runs after earlier-sequenced events at the same time") {
  Simulator sim;
  auto& a = sim.emplace<Probe>("a");
  struct Spawner final : Component {
    ComponentId target;
    explicit Spawner(ComponentId t) : Component("s", {}, {"x"}), target(t) {}
    void handle(Simulator& sim, const Event&) override { sim.schedule_self(0, target, {7, 0}); }
  };
  auto& s = sim.emplace<Spawner>(a.id());
  sim.schedule_self(2, s.id(), {0, 0});
  sim.schedule_self(2, a.id(), {5, 0});
  sim.run_until(5);
  CHECK(a.log == std::vector<std::pair<SimTime, std::uint32_t>>{{2, 5}, {2, 7}});
}

TEST_CASE("schedule relative to the clock") {
  Simulator sim;
  auto& p = sim.emplace<Probe>("p");
  struct Later final : Component {
    ComponentId target;
    explicit Later(ComponentId t) : Component("l", {}, {"x"}), target(t) {}
    void handle(Simulator& sim, const Event&) override { sim.schedule_self(5, target, {8, 0}); }
  };
  auto& l = sim.emplace<Later>(p.id());
  sim.schedule_self(1, l.id(), {});
  sim.run_until(100);
  CHECK(p.log == std::vector<std::pair<SimTime, std::uint32_t>>{{6, 8}});
}

TEST_CASE("horizon handling") {
  Simulator sim;
  auto& p = sim.emplace<Probe>("p");
  sim.schedule_self(0, p.id(), {1, 0});
  sim.schedule_self(0, p.id(), {2, 0});
  sim.schedule_self(1, p.id(), {3, 0});
  auto stats = sim.run_until(0);
  CHECK(stats.events == 2);
  CHECK(sim.now() == 0);
  CHECK(sim.pending() == 1);
  stats = sim.run_until(0.5);
  CHECK(sim.now() == 0.5);
  stats = sim.run_until(10);
  CHECK(stats.events == 1);
  CHECK(sim.now() == 1);  // queue drained: clock stays at the last event
  CHECK(stats.statistics.at("p.seen") == 3);
  CHECK_THROWS_AS(sim.run_until(-1), std::invalid_argument);
}

TEST_CASE("wiring") {
  Simulator sim;
  auto& a = sim.emplace<Probe>("a", true);
  auto& b = sim.emplace<Probe>("b");
  sim.connect(a.id(), 0, b.id(), 0, 2.5);
  sim.schedule(1, a.id(), 0, {6, 0});
  sim.run_until(10);
  CHECK(b.log == std::vector<std::pair<SimTime, std::uint32_t>>{{3.5, 6}});

  CHECK_THROWS_AS(sim.connect(a.id(), 0, b.id(), 0, 1), std::invalid_argument);  // already wired
  CHECK_THROWS_AS(sim.connect(b.id(), 1, a.id(), 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(sim.connect(b.id(), 0, a.id(), 0, -1), std::invalid_argument);
  CHECK_THROWS_AS(sim.connect(b.id(), 0, 42, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(sim.schedule(-0.1, a.id(), kSelf, {}), std::invalid_argument);

  Simulator open;
  auto& lone = open.emplace<Probe>("lone", true);
  open.schedule(0, lone.id(), 0, {1, 0});
  CHECK_THROWS_AS(open.run_until(1), SimulationError);
}

TEST_CASE("component failure carries clock time and component") {
  Simulator sim;
  sim.emplace<Probe>("first");
  auto& p = sim.emplace<Probe>("faulty");
  sim.schedule_self(4.25, p.id(), {99, 0});
  try {
    sim.run_until(10);
    FAIL("expected SimulationError");
  } catch (const SimulationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("t=4.25") != std::string::npos);
    CHECK(msg.find("faulty") != std::string::npos);
    CHECK(msg.find("id 1") != std::string::npos);
    CHECK(msg.find("bad payload") != std::string::npos);
  }
}

TEST_CASE("warm-up resets statistics once") {
  Simulator sim;
  auto& p = sim.emplace<Probe>("p");
  for (int t = 0; t < 10; ++t) sim.schedule_self(t, p.id(), {1, 0});
  sim.set_warmup(5);
  const auto stats = sim.run_until(100);
  CHECK(stats.events == 10);
  CHECK(stats.statistics.at("p.seen") == 5);
}

TEST_CASE("trace output") {
  std::ostringstream trace;
  Simulator sim;
  auto& a = sim.emplace<Probe>("a", true);
  auto& b = sim.emplace<Probe>("b");
  sim.connect(a.id(), 0, b.id(), 0, 1);
  sim.set_trace(&trace);
  sim.schedule(0, a.id(), 0, {3, 0});
  sim.run_until(5);
  std::istringstream lines(trace.str());
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(lines, line)) rows.push_back(nlohmann::json::parse(line));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0]["component"] == "a");
  CHECK(rows[0]["port"] == "in");
  CHECK(rows[1]["time"] == 1.0);
  CHECK(rows[1]["payload"] == "3");
}

TEST_CASE("identical seeds give identical random streams") {
  Simulator a(17), b(17);
  for (int i = 0; i < 100; ++i) CHECK(a.rng()() == b.rng()());
}
