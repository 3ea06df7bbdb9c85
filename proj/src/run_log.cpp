#include "topogen/run_log.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace topogen::runlog {

using nlohmann::json;

void JsonlWriter::evaluation(const EvaluationRecord& rec, std::size_t cumulative) {
  json line = {{"type", "evaluation"},
               {"design_id", rec.design_id},
               {"iteration", rec.evaluated_at_iteration},
               {"fitness", rec.fitness},
               {"cumulative_evaluations", cumulative}};
  if (wall_) line["wall_time"] = rec.wall_time.count();
  out_ << line.dump() << '\n';
}

void JsonlWriter::nn_iteration(const NnIterationRecord& rec) {
  json line = {{"type", "iteration"},
               {"iteration", rec.iteration},
               {"surrogate_val_loss", rec.surrogate_val_loss ? json(*rec.surrogate_val_loss) : json(nullptr)},
               {"n_predicted", rec.n_predicted},
               {"n_evaluated", rec.n_evaluated},
               {"fallback", rec.fallback}};
  out_ << line.dump() << '\n';
}

void JsonlWriter::summary(const RunSummary& s) {
  json line = {{"type", "summary"},
               {"run_index", s.run_index},
               {"seed", s.seed},
               {"found_optimum", s.found_optimum},
               {"evaluations_to_optimum",
                s.evaluations_to_optimum ? json(*s.evaluations_to_optimum) : json(nullptr)},
               {"best_fitness", s.best_fitness},
               {"best_design_id", s.best_design},
               {"iterations", s.iterations},
               {"evaluations", s.evaluations},
               {"stop_reason", s.stop_reason}};
  if (wall_) line["wall_time"] = s.wall_time;
  out_ << line.dump() << '\n';
}

ParsedRun parse_run_log(std::istream& in) {
  ParsedRun run;
  std::string text;
  std::size_t lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    if (text.empty()) continue;
    try {
      const json line = json::parse(text);
      const auto type = line.at("type").get<std::string>();
      if (type == "evaluation") {
        run.evaluations.push_back({line.at("design_id").get<DesignId>(), line.at("iteration").get<std::size_t>(),
                                   line.at("fitness").get<double>(),
                                   line.at("cumulative_evaluations").get<std::size_t>()});
      } else if (type == "iteration") {
        NnIterationRecord r;
        r.iteration = line.at("iteration").get<std::size_t>();
        if (!line.at("surrogate_val_loss").is_null()) r.surrogate_val_loss = line["surrogate_val_loss"].get<double>();
        r.n_predicted = line.at("n_predicted").get<std::size_t>();
        r.n_evaluated = line.at("n_evaluated").get<std::size_t>();
        r.fallback = line.at("fallback").get<bool>();
        run.iterations.push_back(r);
      } else if (type == "summary") {
        RunSummary s;
        s.run_index = line.at("run_index").get<std::size_t>();
        s.seed = line.at("seed").get<std::uint64_t>();
        s.found_optimum = line.at("found_optimum").get<bool>();
        if (!line.at("evaluations_to_optimum").is_null())
          s.evaluations_to_optimum = line["evaluations_to_optimum"].get<std::size_t>();
        s.best_fitness = line.at("best_fitness").get<double>();
        s.best_design = line.at("best_design_id").get<DesignId>();
        s.iterations = line.at("iterations").get<std::size_t>();
        s.evaluations = line.at("evaluations").get<std::size_t>();
        s.stop_reason = line.at("stop_reason").get<std::string>();
        if (line.contains("wall_time")) s.wall_time = line["wall_time"].get<double>();
        run.summary = s;
      } else {
        throw std::runtime_error("unknown record type '" + type + "'");
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("run log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return run;
}

Aggregate aggregate(std::span<const RunSummary> runs) {
  Aggregate a;
  a.runs = runs.size();
  double sum = 0;
  for (const auto& r : runs)
    if (r.found_optimum && r.evaluations_to_optimum) {
      ++a.successes;
      sum += static_cast<double>(*r.evaluations_to_optimum);
    }
  a.success_fraction = a.runs ? static_cast<double>(a.successes) / static_cast<double>(a.runs) : 0.0;
  if (a.successes == 0) return a;
  const double mean = sum / static_cast<double>(a.successes);
  double ss = 0;
  for (const auto& r : runs)
    if (r.found_optimum && r.evaluations_to_optimum) {
      const double d = static_cast<double>(*r.evaluations_to_optimum) - mean;
      ss += d * d;
    }
  a.mean_evaluations = mean;
  a.std_evaluations = a.successes > 1 ? std::sqrt(ss / static_cast<double>(a.successes - 1)) : 0.0;
  return a;
}

std::string summary_csv(std::span<const RunSummary> runs) {
  std::ostringstream out;
  out.precision(17);
  out << "run_index,seed,found_optimum,evaluations_to_optimum,best_fitness,best_design_id,iterations,evaluations,"
         "stop_reason,wall_time\n";
  for (const auto& r : runs) {
    out << r.run_index << ',' << r.seed << ',' << (r.found_optimum ? 1 : 0) << ',';
    if (r.evaluations_to_optimum) out << *r.evaluations_to_optimum;
    out << ',' << r.best_fitness << ',' << r.best_design << ',' << r.iterations << ',' << r.evaluations << ','
        << r.stop_reason << ',' << r.wall_time << '\n';
  }
  return out.str();
}

}  // namespace topogen::runlog
