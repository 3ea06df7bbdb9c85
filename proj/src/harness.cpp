#include "topogen/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace topogen::harness {

namespace fs = std::filesystem;
using nlohmann::json;

DesignId Oracle::best() const {
  for (const auto& e : entries)
    if (e.rank == 1) return e.design_id;
  throw std::logic_error("empty oracle");
}

std::size_t Oracle::ties_at_best() const {
  const double f = entries.at(best()).fitness;
  return static_cast<std::size_t>(
             std::count_if(entries.begin(), entries.end(), [&](const auto& e) { return e.fitness == f; })) -
         1;
}

std::size_t Oracle::tied_designs() const {
  std::map<double, std::size_t> counts;
  for (const auto& e : entries) ++counts[e.fitness];
  std::size_t n = 0;
  for (const auto& [f, c] : counts)
    if (c > 1) n += c;
  return n;
}

Oracle rank_table(std::vector<double> fitness, Sense sense, const std::function<std::string(DesignId)>& label) {
  Oracle o;
  o.sense = sense;
  o.entries.resize(fitness.size());
  std::vector<DesignId> order(fitness.size());
  std::iota(order.begin(), order.end(), DesignId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](DesignId a, DesignId b) { return better(fitness[a], fitness[b], sense); });
  for (std::size_t r = 0; r < order.size(); ++r) {
    const DesignId id = order[r];
    o.entries[id] = {id, label ? label(id) : std::string(), fitness[id], r + 1};
  }
  return o;
}

Oracle exhaustive(const DesignSpace& space, const Evaluator& evaluator,
                  const std::function<std::string(DesignId)>& label, std::size_t threads) {
  std::vector<double> fitness(space.size());
  threads = std::max<std::size_t>(1, std::min(threads, space.size()));
  if (threads == 1) {
    for (DesignId id = 0; id < space.size(); ++id) fitness[id] = evaluator.evaluate(id);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t id; (id = next++) < space.size();)
            fitness[id] = evaluator.evaluate(static_cast<DesignId>(id));
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return rank_table(std::move(fitness), evaluator.sense(), label);
}

void write_oracle_csv(std::ostream& out, const Oracle& oracle) {
  out << "design_id," << oracle.label_column << ',' << oracle.value_column << ",rank\n";
  char buf[64];
  for (const auto& e : oracle.entries) {
    std::snprintf(buf, sizeof buf, "%.17g", e.fitness);
    out << e.design_id << ',' << e.label << ',' << buf << ',' << e.rank << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

Oracle read_oracle_csv(const fs::path& path, Sense sense) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("oracle file not found: " + path.string());
  Oracle o;
  o.sense = sense;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty oracle file");
  const auto header = split_csv(line);
  if (header.size() != 4 || header[0] != "design_id" || header[3] != "rank")
    throw std::runtime_error(path.string() + ": unexpected oracle header");
  o.label_column = header[1];
  o.value_column = header[2];
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    try {
      if (cells.size() != 4) throw std::invalid_argument("expected 4 columns");
      const auto id = static_cast<DesignId>(std::stoul(cells[0]));
      if (id != o.entries.size()) throw std::invalid_argument("design ids must be 0..n-1 in order");
      o.entries.push_back({id, cells[1], std::stod(cells[2]), std::stoul(cells[3])});
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (o.entries.empty()) throw std::runtime_error(path.string() + ": oracle has no rows");
  return o;
}

std::string permutation_label(const loop::LoopDesign& layout) {
  std::string s;
  for (std::size_t i = 0; i < layout.order.size(); ++i) {
    if (layout.order.size() > 9 && i > 0) s += '-';
    s += std::to_string(layout.order[i]);
  }
  return s;
}

Oracle loop_oracle(const loop::LoopBenchmark& bench, const loop::LoopParams& params, std::uint64_t master_seed,
                   std::size_t threads) {
  loop::LoopEvaluator ev(bench, params, master_seed);
  Oracle o = exhaustive(bench.space, ev, [&](DesignId id) { return permutation_label(bench.layouts[id]); }, threads);
  o.label_column = "permutation";
  o.value_column = "mean_cycle_time";
  return o;
}

std::vector<double> read_fitness_table(const fs::path& path, std::size_t designs) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("fitness table not found: " + path.string());
  std::vector<std::optional<double>> seen(designs);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (lineno == 1 && line.rfind("design_id", 0) == 0)) continue;
    const auto cells = split_csv(line);
    try {
      if (cells.size() != 2) throw std::invalid_argument("expected design_id,fitness");
      const auto id = std::stoul(cells[0]);
      if (id >= designs) throw std::invalid_argument("design id " + cells[0] + " out of range");
      if (seen[id]) throw std::invalid_argument("design id " + cells[0] + " listed twice");
      seen[id] = std::stod(cells[1]);
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::vector<double> out(designs);
  for (std::size_t i = 0; i < designs; ++i) {
    if (!seen[i]) throw std::runtime_error(path.string() + ": no fitness for design " + std::to_string(i));
    out[i] = *seen[i];
  }
  return out;
}

// ---- configuration ----

namespace {

template <class T>
T get_as(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key, e.what());
  }
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where, "expected an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.contains(k)) throw ConfigError(where + "." + k, "unknown key");
}

template <class T>
void maybe(const json& obj, const std::string& key, T& target, const std::string& where) {
  if (obj.contains(key)) target = get_as<T>(obj, key, where);
}

template <class T>
void maybe_optional(const json& obj, const std::string& key, std::optional<T>& target, const std::string& where) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null())
    target.reset();
  else
    target = get_as<T>(obj, key, where);
}

Sense parse_sense(const std::string& s, const std::string& where) {
  if (s == "minimize") return Sense::minimize;
  if (s == "maximize") return Sense::maximize;
  throw ConfigError(where, "sense must be 'minimize' or 'maximize'");
}

const char* sense_name(Sense s) { return s == Sense::minimize ? "minimize" : "maximize"; }

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  check_keys(doc, {"benchmark", "algorithm", "params", "runs", "master_seed", "termination", "output_dir", "threads",
                   "log_wall_time"},
             "$");
  ExperimentConfig c;
  const auto resolve = [&](const fs::path& p) { return p.is_absolute() || base_dir.empty() ? p : base_dir / p; };

  if (!doc.contains("benchmark")) throw ConfigError("$.benchmark", "missing");
  const json& b = doc["benchmark"];
  check_keys(b, {"type", "machines", "simulation", "design_space", "fitness_table", "sense", "oracle"}, "$.benchmark");
  c.benchmark = get_as<std::string>(b, "type", "$.benchmark");
  if (c.benchmark == "loop") {
    c.machines = get_as<int>(b, "machines", "$.benchmark");
    if (b.contains("simulation")) {
      const json& s = b["simulation"];
      const std::string w = "$.benchmark.simulation";
      check_keys(s, {"interarrival", "processing_time", "transport_time", "buffer_capacity", "horizon", "replications"},
                 w);
      maybe(s, "interarrival", c.simulation.interarrival, w);
      maybe(s, "processing_time", c.simulation.processing_time, w);
      maybe(s, "transport_time", c.simulation.transport_time, w);
      maybe(s, "buffer_capacity", c.simulation.buffer_capacity, w);
      maybe(s, "horizon", c.simulation.horizon, w);
      maybe(s, "replications", c.simulation.replications, w);
    }
  } else if (c.benchmark == "external") {
    c.design_space = resolve(get_as<std::string>(b, "design_space", "$.benchmark"));
    c.fitness_table = resolve(get_as<std::string>(b, "fitness_table", "$.benchmark"));
  } else {
    throw ConfigError("$.benchmark.type", "must be 'loop' or 'external'");
  }
  if (b.contains("sense")) c.sense = parse_sense(get_as<std::string>(b, "sense", "$.benchmark"), "$.benchmark.sense");
  if (b.contains("oracle") && !b["oracle"].is_null())
    c.oracle = resolve(get_as<std::string>(b, "oracle", "$.benchmark"));

  const auto algo = doc.contains("algorithm") ? get_as<std::string>(doc, "algorithm", "$") : std::string("ga");
  if (algo == "ga")
    c.algorithm = Algorithm::ga;
  else if (algo == "nn-ga")
    c.algorithm = Algorithm::nn_ga;
  else
    throw ConfigError("$.algorithm", "must be 'ga' or 'nn-ga'");

  if (doc.contains("params")) {
    const json& p = doc["params"];
    const std::string w = "$.params";
    std::set<std::string> keys = {"selection_pressure", "mutation_pressure", "recombination_pressure",
                                  "population_size",    "candidate_pool_size", "mutation_count",
                                  "recombination_count"};
    if (c.algorithm == Algorithm::nn_ga)
      keys.insert({"learning_set_size", "evaluations_per_iteration", "surrogate_variant", "eta", "tuning_trials",
                   "max_epochs", "patience", "validation_fraction", "pairs_per_point", "keep_snapshots"});
    check_keys(p, keys, w);
    GaParams& g = c.algorithm == Algorithm::ga ? c.ga : c.nn.ga;
    maybe(p, "selection_pressure", g.selection_pressure, w);
    maybe(p, "mutation_pressure", g.mutation_pressure, w);
    maybe(p, "recombination_pressure", g.recombination_pressure, w);
    maybe(p, "population_size", g.population_size, w);
    maybe(p, "candidate_pool_size", g.candidate_pool_size, w);
    maybe(p, "mutation_count", g.mutation_count, w);
    maybe(p, "recombination_count", g.recombination_count, w);
    maybe(p, "learning_set_size", c.nn.learning_set_size, w);
    maybe(p, "evaluations_per_iteration", c.nn.evaluations_per_iteration, w);
    if (p.contains("surrogate_variant")) {
      try {
        c.nn.variant = nn::parse_variant(get_as<std::string>(p, "surrogate_variant", w));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(w + ".surrogate_variant", e.what());
      }
    }
    maybe(p, "eta", c.nn.eta, w);
    maybe(p, "tuning_trials", c.nn.tuning_trials, w);
    maybe(p, "max_epochs", c.nn.train.max_epochs, w);
    maybe(p, "patience", c.nn.train.patience, w);
    maybe(p, "validation_fraction", c.nn.train.validation_fraction, w);
    maybe(p, "pairs_per_point", c.nn.train.pairs_per_point, w);
    maybe(p, "keep_snapshots", c.nn.keep_snapshots, w);
  }

  maybe(doc, "runs", c.runs, "$");
  maybe(doc, "master_seed", c.master_seed, "$");
  maybe(doc, "threads", c.threads, "$");
  maybe(doc, "log_wall_time", c.log_wall_time, "$");
  if (doc.contains("output_dir")) c.output_dir = get_as<std::string>(doc, "output_dir", "$");
  if (doc.contains("termination")) {
    const json& t = doc["termination"];
    const std::string w = "$.termination";
    check_keys(t, {"max_iterations", "max_evaluations", "target_fitness", "stagnation_window", "stop_at_optimum"}, w);
    maybe_optional(t, "max_iterations", c.termination.max_iterations, w);
    maybe_optional(t, "max_evaluations", c.termination.max_evaluations, w);
    maybe_optional(t, "target_fitness", c.termination.target_fitness, w);
    maybe_optional(t, "stagnation_window", c.termination.stagnation_window, w);
    maybe(t, "stop_at_optimum", c.stop_at_optimum, w);
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  return from_json(read_file(path), path.parent_path());
}

void ExperimentConfig::validate() const {
  if (runs == 0) throw ConfigError("$.runs", "must be at least 1");
  if (benchmark == "loop" && machines < 1) throw ConfigError("$.benchmark.machines", "must be at least 1");
  try {
    simulation.validate();
  } catch (const std::exception& e) {
    throw ConfigError("$.benchmark.simulation", e.what());
  }
  try {
    if (algorithm == Algorithm::ga)
      ga.validate();
    else
      nn.validate();
  } catch (const std::exception& e) {
    throw ConfigError("$.params", e.what());
  }
  Termination t = termination;
  if (stop_at_optimum) t.target_design = 0;
  try {
    t.validate();
  } catch (const std::exception& e) {
    throw ConfigError("$.termination", e.what());
  }
}

std::string ExperimentConfig::to_json() const {
  json b = {{"type", benchmark}, {"sense", sense_name(sense)}, {"oracle", oracle ? json(oracle->string()) : json()}};
  if (benchmark == "loop") {
    b["machines"] = machines;
    b["simulation"] = {{"interarrival", simulation.interarrival},
                       {"processing_time", simulation.processing_time},
                       {"transport_time", simulation.transport_time},
                       {"buffer_capacity", simulation.buffer_capacity},
                       {"horizon", simulation.horizon},
                       {"replications", simulation.replications}};
  } else {
    b["design_space"] = design_space.string();
    b["fitness_table"] = fitness_table.string();
  }
  const GaParams& g = algorithm == Algorithm::ga ? ga : nn.ga;
  json p = {{"selection_pressure", g.selection_pressure},   {"mutation_pressure", g.mutation_pressure},
            {"recombination_pressure", g.recombination_pressure}, {"population_size", g.population_size},
            {"candidate_pool_size", g.candidate_pool_size}, {"mutation_count", g.mutation_count},
            {"recombination_count", g.recombination_count}};
  if (algorithm == Algorithm::nn_ga) {
    p["learning_set_size"] = nn.learning_set_size;
    p["evaluations_per_iteration"] = nn.evaluations_per_iteration;
    p["surrogate_variant"] = nn::to_string(nn.variant);
    p["eta"] = nn.eta;
    p["tuning_trials"] = nn.tuning_trials;
    p["max_epochs"] = nn.train.max_epochs;
    p["patience"] = nn.train.patience;
    p["validation_fraction"] = nn.train.validation_fraction;
    p["pairs_per_point"] = nn.train.pairs_per_point;
    p["keep_snapshots"] = nn.keep_snapshots;
  }
  json doc = {{"benchmark", b},
              {"algorithm", algorithm == Algorithm::ga ? "ga" : "nn-ga"},
              {"params", p},
              {"runs", runs},
              {"master_seed", master_seed},
              {"termination",
               {{"max_iterations", opt(termination.max_iterations)},
                {"max_evaluations", opt(termination.max_evaluations)},
                {"target_fitness", opt(termination.target_fitness)},
                {"stagnation_window", opt(termination.stagnation_window)},
                {"stop_at_optimum", stop_at_optimum}}},
              {"output_dir", output_dir.string()},
              {"threads", threads},
              {"log_wall_time", log_wall_time}};
  return doc.dump(2) + "\n";
}

std::uint64_t run_seed(std::uint64_t master_seed, std::size_t run_index) {
  return derive_seed({master_seed, tag(StreamTag::run), run_index});
}

std::string aggregate_json(const runlog::Aggregate& a, std::size_t design_space_size) {
  json doc = {{"runs", a.runs},
              {"successes", a.successes},
              {"success_fraction", a.success_fraction},
              {"mean_evaluations", opt(a.mean_evaluations)},
              {"std_evaluations", opt(a.std_evaluations)},
              {"design_space_size", design_space_size},
              {"mean_fraction_evaluated",
               a.mean_evaluations ? json(*a.mean_evaluations / static_cast<double>(design_space_size)) : json()}};
  return doc.dump(2) + "\n";
}

// ---- experiments ----

namespace {

struct Benchmark {
  std::optional<loop::LoopBenchmark> loop;
  std::optional<DesignSpace> external;
  std::vector<double> table;
  std::unique_ptr<Evaluator> evaluator;
  Oracle oracle;

  const DesignSpace& space() const { return loop ? loop->space : *external; }
};

std::string node_label(const DesignSpace& space, DesignId id) {
  std::string s;
  for (auto n : space.design(id).nodes) {
    if (!s.empty()) s += ' ';
    s += space.instances()[n].id;
  }
  return s;
}

Benchmark build_benchmark(const ExperimentConfig& c) {
  Benchmark b;
  if (c.benchmark == "loop") {
    b.loop = loop::generate_design_space(c.machines);
    b.evaluator = std::make_unique<loop::LoopEvaluator>(*b.loop, c.simulation, c.master_seed);
    if (c.oracle) {
      b.oracle = read_oracle_csv(*c.oracle, Sense::minimize);
    } else {
      b.oracle = loop_oracle(*b.loop, c.simulation, c.master_seed, c.threads);
    }
  } else {
    b.external = load_design_space(c.design_space);
    b.table = read_fitness_table(c.fitness_table, b.external->size());
    const auto* table = &b.table;
    b.evaluator = std::make_unique<FunctionEvaluator>([table](DesignId id) { return table->at(id); }, c.sense);
    if (c.oracle) {
      b.oracle = read_oracle_csv(*c.oracle, c.sense);
    } else {
      const DesignSpace* space = &*b.external;
      b.oracle = rank_table(b.table, c.sense, [space](DesignId id) { return node_label(*space, id); });
    }
  }
  if (b.oracle.size() != b.space().size())
    throw ConfigError("$.benchmark.oracle", "oracle has " + std::to_string(b.oracle.size()) + " rows but the design space has " +
                                                std::to_string(b.space().size()) + " designs");
  return b;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::function<void(const runlog::RunSummary&)>& progress) {
  config.validate();
  Benchmark bench = build_benchmark(config);
  const DesignSpace& space = bench.space();
  const DesignId optimum = bench.oracle.best();

  fs::create_directories(config.output_dir);
  write_file(config.output_dir / "config.json", config.to_json());
  {
    std::ostringstream s;
    write_oracle_csv(s, bench.oracle);
    write_file(config.output_dir / "oracle.csv", s.str());
  }

  Termination term = config.termination;
  if (config.stop_at_optimum) term.target_design = optimum;

  ExperimentResult result;
  result.design_space_size = space.size();
  for (std::size_t k = 0; k < config.runs; ++k) {
    const std::uint64_t seed = run_seed(config.master_seed, k);
    std::ostringstream log;
    runlog::JsonlWriter writer(log, config.log_wall_time);
    RunOptions opts;
    opts.threads = config.threads;
    opts.hooks.on_evaluation = [&](const EvaluationRecord& rec, std::size_t cum) { writer.evaluation(rec, cum); };

    const auto t0 = std::chrono::steady_clock::now();
    GaResult ga;
    std::vector<std::string> snapshots;
    if (config.algorithm == Algorithm::ga) {
      ga = run_ga(space, *bench.evaluator, config.ga, term, seed, opts);
    } else {
      NnRunOptions nopts{opts, [&](const NnIterationRecord& r) { writer.nn_iteration(r); }};
      auto res = run_nn_ga(space, *bench.evaluator, config.nn, term, seed, nopts);
      ga = std::move(res.ga);
      snapshots = std::move(res.snapshots);
    }

    runlog::RunSummary s;
    s.run_index = k;
    s.seed = seed;
    for (std::size_t i = 0; i < ga.archive.size(); ++i)
      if (ga.archive[i].design_id == optimum) {
        s.found_optimum = true;
        s.evaluations_to_optimum = i + 1;
      }
    const Sense sense = bench.evaluator->sense();
    std::size_t best = 0;
    for (std::size_t i = 1; i < ga.archive.size(); ++i)
      if (better(ga.archive[i].fitness, ga.archive[best].fitness, sense)) best = i;
    if (!ga.archive.empty()) {
      s.best_fitness = ga.archive[best].fitness;
      s.best_design = ga.archive[best].design_id;
    }
    s.iterations = ga.iterations;
    s.evaluations = ga.archive.size();
    s.stop_reason = ga.stop_reason;
    s.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    writer.summary(s);
    write_file(config.output_dir / ("run_" + std::to_string(k) + ".jsonl"), log.str());
    if (!snapshots.empty()) {
      const fs::path dir = config.output_dir / ("run_" + std::to_string(k) + "_snapshots");
      fs::create_directories(dir);
      for (std::size_t i = 0; i < snapshots.size(); ++i)
        write_file(dir / ("model_" + std::to_string(i) + ".json"), snapshots[i] + "\n");
    }
    result.runs.push_back(s);
    if (progress) progress(s);
  }
  result.aggregate = runlog::aggregate(result.runs);
  write_file(config.output_dir / "summary.csv", runlog::summary_csv(result.runs));
  write_file(config.output_dir / "aggregate.json", aggregate_json(result.aggregate, result.design_space_size));
  return result;
}

// ---- reports ----

ExperimentReport report_experiment(const fs::path& dir) {
  const json cfg = json::parse(read_file(dir / "config.json"));
  ExperimentReport rep;
  rep.dir = dir;
  rep.algorithm = cfg.at("algorithm").get<std::string>();
  const auto& b = cfg.at("benchmark");
  rep.benchmark = b.at("type").get<std::string>() == "loop"
                      ? "loop(" + std::to_string(b.at("machines").get<int>()) + ")"
                      : fs::path(b.at("design_space").get<std::string>()).filename().string();
  const Sense sense = parse_sense(b.at("sense").get<std::string>(), "$.benchmark.sense");
  const Oracle oracle = read_oracle_csv(dir / "oracle.csv", sense);
  const DesignId optimum = oracle.best();
  rep.design_space_size = oracle.size();

  std::vector<std::vector<double>> curves;  // best rank percent after each evaluation, per run
  for (std::size_t k = 0;; ++k) {
    const fs::path path = dir / ("run_" + std::to_string(k) + ".jsonl");
    if (!fs::exists(path)) break;
    std::ifstream in(path);
    const auto run = runlog::parse_run_log(in);
    if (!run.summary) throw std::runtime_error(path.string() + ": run log has no summary record");
    runlog::RunSummary s = *run.summary;
    // Recompute the optimum statistics from the evaluation records themselves.
    s.found_optimum = false;
    s.evaluations_to_optimum.reset();
    std::vector<double> curve;
    std::size_t best_rank = oracle.size();
    for (const auto& e : run.evaluations) {
      if (e.design_id >= oracle.size()) throw std::runtime_error(path.string() + ": design id outside the oracle");
      best_rank = std::min(best_rank, oracle.rank_of(e.design_id));
      curve.push_back(100.0 * static_cast<double>(best_rank) / static_cast<double>(oracle.size()));
      if (e.design_id == optimum && !s.found_optimum) {
        s.found_optimum = true;
        s.evaluations_to_optimum = e.cumulative;
      }
    }
    curves.push_back(std::move(curve));
    rep.runs.push_back(s);
  }
  if (rep.runs.empty()) throw std::runtime_error(dir.string() + ": no run logs");
  rep.aggregate = runlog::aggregate(rep.runs);

  std::size_t longest = 0;
  for (const auto& c : curves) longest = std::max(longest, c.size());
  std::ostringstream out;
  out.precision(10);
  out << "evaluations,mean_best_rank_percent,min_best_rank_percent,max_best_rank_percent\n";
  for (std::size_t e = 0; e < longest; ++e) {
    double sum = 0, lo = 1e300, hi = -1e300;
    std::size_t count = 0;
    for (const auto& c : curves) {
      if (c.empty()) continue;
      const double v = c[std::min(e, c.size() - 1)];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      ++count;
    }
    out << e + 1 << ',' << sum / static_cast<double>(count) << ',' << lo << ',' << hi << '\n';
  }
  write_file(dir / "progress.csv", out.str());
  return rep;
}

std::vector<ExperimentReport> report(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> dirs;
  if (fs::exists(dir / "config.json")) dirs.push_back(dir);
  std::vector<fs::path> subs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory() && fs::exists(entry.path() / "config.json")) subs.push_back(entry.path());
  std::sort(subs.begin(), subs.end());
  dirs.insert(dirs.end(), subs.begin(), subs.end());
  if (dirs.empty()) throw std::runtime_error(dir.string() + ": no experiment outputs found");

  std::vector<ExperimentReport> reports;
  for (const auto& d : dirs) reports.push_back(report_experiment(d));

  std::ostringstream out;
  out.precision(10);
  out << "experiment,algorithm,benchmark,design_space_size,runs,successes,mean_evaluations,std_evaluations,"
         "mean_percent_evaluated\n";
  for (const auto& r : reports) {
    const auto& a = r.aggregate;
    out << (r.dir == dir ? std::string(".") : r.dir.filename().string()) << ',' << r.algorithm << ',' << r.benchmark
        << ',' << r.design_space_size << ',' << a.runs << ',' << a.successes << ',';
    if (a.mean_evaluations)
      out << *a.mean_evaluations << ',' << *a.std_evaluations << ','
          << 100.0 * *a.mean_evaluations / static_cast<double>(r.design_space_size);
    else
      out << ",,";
    out << '\n';
  }
  write_file(dir / "scalability.csv", out.str());
  return reports;
}

}  // namespace topogen::harness
