#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "topogen/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace topogen;

namespace {

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", {{"type", kind}, {"message", message}}}}.dump() << '\n';
  return code;
}

json oracle_summary(const harness::Oracle& oracle, int machines, const fs::path& file, double seconds) {
  const auto best = oracle.best();
  return {{"machines", machines},
          {"designs", oracle.size()},
          {"best_design_id", best},
          {"best_permutation", oracle.entries[best].label},
          {"best_mean_cycle_time", oracle.entries[best].fitness},
          {"ties_at_best", oracle.ties_at_best()},
          {"tied_designs", oracle.tied_designs()},
          {"output", file.string()},
          {"wall_time", seconds}};
}

fs::path write_loop_oracle(int machines, std::uint64_t seed, std::size_t threads, const fs::path& out_dir,
                           json& summary) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto bench = loop::generate_design_space(machines);
  const auto oracle = harness::loop_oracle(bench, {}, seed, threads);
  fs::create_directories(out_dir);
  const fs::path file = out_dir / ("oracle_" + std::to_string(machines) + ".csv");
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  harness::write_oracle_csv(out, oracle);
  summary = oracle_summary(oracle, machines, file,
                           std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation-based topology optimization of production systems"};
  app.require_subcommand(1);

  int machines = 6;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string out_dir = ".";

  auto* oracle = app.add_subcommand("oracle", "Simulate every design of a benchmark and rank them");
  auto* oracle_loop = oracle->add_subcommand("loop", "n-machine loop layout");
  oracle->require_subcommand(1);
  oracle_loop->add_option("--machines,-n", machines, "Number of machines")->required()->check(CLI::Range(1, 12));
  oracle_loop->add_option("--seed,-s", seed, "Master seed");
  oracle_loop->add_option("--threads", threads, "Concurrent simulations")->check(CLI::PositiveNumber);
  oracle_loop->add_option("--out,-o", out_dir, "Output directory");

  bool exhaustive = false;
  std::string space_file;
  auto* bench = app.add_subcommand("bench", "Generate a benchmark design space");
  auto* bench_loop = bench->add_subcommand("loop", "n-machine loop layout");
  bench->require_subcommand(1);
  bench_loop->add_option("--machines,-n", machines, "Number of machines")->required()->check(CLI::Range(1, 12));
  bench_loop->add_option("--seed,-s", seed, "Master seed");
  bench_loop->add_flag("--exhaustive", exhaustive, "Also simulate every design and write oracle_<n>.csv");
  bench_loop->add_option("--threads", threads, "Concurrent simulations")->check(CLI::PositiveNumber);
  bench_loop->add_option("--out,-o", out_dir, "Output directory");
  bench_loop->add_option("--design-space", space_file, "Write the design space as JSON to this file");

  std::string config_file;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("--config,-c", config_file, "Experiment config")->required();

  std::string report_dir;
  auto* rep = app.add_subcommand("report", "Derive progress and scalability tables from run logs");
  rep->add_option("--dir,-d", report_dir, "Experiment output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*oracle_loop) {
      json summary;
      write_loop_oracle(machines, seed, threads, out_dir, summary);
      std::cout << summary.dump() << '\n';
    } else if (*bench_loop) {
      const auto b = loop::generate_design_space(machines);
      json summary = {{"machines", machines},
                      {"designs", b.space.size()},
                      {"chromosome_length", b.space.chromosome_length()},
                      {"plans", loop::enumerate_plans(machines).size()}};
      if (!space_file.empty()) {
        std::ofstream out(space_file, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + space_file);
        out << design_space_to_json(b.space) << '\n';
        summary["design_space"] = space_file;
      }
      if (exhaustive) {
        json oracle_info;
        write_loop_oracle(machines, seed, threads, out_dir, oracle_info);
        summary["oracle"] = oracle_info;
      }
      std::cout << summary.dump() << '\n';
    } else if (*run) {
      const auto cfg = harness::ExperimentConfig::load(config_file);
      const auto result = harness::run_experiment(cfg, [](const runlog::RunSummary& s) {
        std::cerr << "run " << s.run_index << ": "
                  << (s.found_optimum ? "optimum after " + std::to_string(*s.evaluations_to_optimum) + " evaluations"
                                      : "optimum not found (" + s.stop_reason + ")")
                  << '\n';
      });
      std::cout << json::parse(harness::aggregate_json(result.aggregate, result.design_space_size)).dump() << '\n';
    } else if (*rep) {
      const auto reports = harness::report(report_dir);
      json out = json::array();
      for (const auto& r : reports) {
        json entry = json::parse(harness::aggregate_json(r.aggregate, r.design_space_size));
        entry["dir"] = r.dir.string();
        entry["algorithm"] = r.algorithm;
        entry["benchmark"] = r.benchmark;
        out.push_back(entry);
      }
      std::cout << out.dump() << '\n';
    }
  } catch (const harness::ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
  return 0;
}
