#include "topogen/ga.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <unordered_set>

namespace topogen {

void GaParams::validate() const {
  if (!(selection_pressure > 0) || !(mutation_pressure > 0) || !(recombination_pressure > 0))
    throw std::invalid_argument("GA pressures must be positive");
  if (population_size < 2) throw std::invalid_argument("GA population size must be at least 2");
  if (candidate_pool_size == 0 || mutation_count == 0 || recombination_count == 0)
    throw std::invalid_argument("GA counts must be positive");
}

VariationConfig GaParams::variation() const {
  return {mutation_pressure, recombination_pressure, mutation_count, recombination_count, candidate_pool_size};
}

void Termination::validate() const {
  if (!max_iterations && !max_evaluations && !target_fitness && !target_design && !stagnation_window)
    throw std::invalid_argument("termination needs at least one criterion");
  if (stagnation_window && *stagnation_window == 0)
    throw std::invalid_argument("stagnation window must be positive");
}

void Archive::add(EvaluationRecord record) {
  if (contains(record.design_id))
    throw std::logic_error("design " + std::to_string(record.design_id) + " evaluated twice");
  index_.emplace(record.design_id, records_.size());
  records_.push_back(std::move(record));
  const std::size_t last = records_.size() - 1;
  if (records_[last].fitness < records_[best_min_].fitness) best_min_ = last;
  if (records_[last].fitness > records_[best_max_].fitness) best_max_ = last;
}

const EvaluationRecord& Archive::best(Sense sense) const {
  if (records_.empty()) throw std::logic_error("empty archive has no best record");
  return records_[sense == Sense::minimize ? best_min_ : best_max_];
}

namespace detail {

std::vector<DesignId> unique_in_order(const std::vector<DesignId>& ids) {
  std::unordered_set<DesignId> seen;
  std::vector<DesignId> out;
  out.reserve(ids.size());
  for (auto id : ids)
    if (seen.insert(id).second) out.push_back(id);
  return out;
}

std::vector<DesignId> select_population(const std::vector<DesignId>& pool, const Archive& archive, Sense sense,
                                        double pressure, std::size_t count, Rng& rng) {
  std::vector<double> scores;
  scores.reserve(pool.size());
  for (auto id : pool) scores.push_back(archive.fitness(id));
  std::vector<DesignId> out;
  for (auto i : rank_select_indices(scores, {pressure, sense}, count, rng)) out.push_back(pool[i]);
  return out;
}

RunState::RunState(const DesignSpace& space, const Evaluator& evaluator, const Termination& termination,
                   const RunOptions& options)
    : space_(space), evaluator_(evaluator), termination_(termination), options_(options),
      sense_(evaluator.sense()) {
  termination_.validate();
}

bool RunState::check_budget_and_target(const EvaluationRecord& rec) {
  const bool hit = (termination_.target_design && rec.design_id == *termination_.target_design) ||
                   (termination_.target_fitness &&
                    !better(*termination_.target_fitness, rec.fitness, sense_));
  if (hit && !target_reached_) {
    target_reached_ = true;
    evaluations_to_target_ = archive_.size();
    stop_reason_ = "target";
    return true;
  }
  if (termination_.max_evaluations && archive_.size() >= *termination_.max_evaluations) {
    stop_reason_ = "max_evaluations";
    return true;
  }
  return false;
}

std::size_t RunState::evaluate(const std::vector<DesignId>& ids, std::size_t iteration) {
  std::vector<DesignId> fresh;
  {
    std::unordered_set<DesignId> seen;
    for (auto id : ids)
      if (!archive_.contains(id) && seen.insert(id).second) fresh.push_back(id);
  }
  if (termination_.max_evaluations) {
    const std::size_t room =
        *termination_.max_evaluations > archive_.size() ? *termination_.max_evaluations - archive_.size() : 0;
    if (fresh.size() > room) fresh.resize(room);
  }

  struct Outcome {
    double fitness = 0;
    std::chrono::duration<double> wall{0};
    std::exception_ptr error;
  };
  std::vector<Outcome> outcomes(fresh.size());
  const auto run_one = [&](std::size_t k) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      outcomes[k].fitness = evaluator_.evaluate(fresh[k]);
    } catch (...) {
      outcomes[k].error = std::current_exception();
    }
    outcomes[k].wall = std::chrono::steady_clock::now() - t0;
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(options_.threads, fresh.size()));
  std::size_t simulated = 0;
  const auto commit = [&](std::size_t k) {
    if (outcomes[k].error) {
      std::string what = "evaluation of design " + std::to_string(fresh[k]) + " failed";
      try {
        std::rethrow_exception(outcomes[k].error);
      } catch (const std::exception& e) {
        what += std::string(": ") + e.what();
      } catch (...) {
      }
      stop_reason_ = "evaluator_failure";
      throw RunAborted(what, result());
    }
    EvaluationRecord rec{fresh[k], space_.chromosome(fresh[k]), outcomes[k].fitness, iteration, outcomes[k].wall};
    archive_.add(rec);
    ++simulated;
    if (options_.hooks.on_evaluation) options_.hooks.on_evaluation(archive_.records().back(), archive_.size());
    return check_budget_and_target(archive_.records().back());
  };

  if (threads == 1) {
    for (std::size_t k = 0; k < fresh.size(); ++k) {
      run_one(k);
      if (commit(k)) break;
    }
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t k = t; k < fresh.size(); k += threads) run_one(k);
      });
    for (auto& th : pool) th.join();
    for (std::size_t k = 0; k < fresh.size(); ++k)
      if (commit(k)) break;
  }
  return simulated;
}

bool RunState::finish_iteration(std::size_t iteration) {
  iterations_ = iteration;
  const double best = archive_.best(sense_).fitness;
  if (!history_.empty() && better(best, history_.back(), sense_))
    since_improvement_ = 0;
  else if (!history_.empty())
    ++since_improvement_;
  history_.push_back(best);
  if (options_.hooks.on_iteration) options_.hooks.on_iteration(iteration, best);
  if (stop_requested()) return true;
  if (termination_.max_iterations && iteration >= *termination_.max_iterations) {
    stop_reason_ = "max_iterations";
  } else if (termination_.stagnation_window && since_improvement_ >= *termination_.stagnation_window) {
    stop_reason_ = "stagnation";
  } else if (termination_.max_evaluations && archive_.size() >= *termination_.max_evaluations) {
    stop_reason_ = "max_evaluations";
  } else if (archive_.size() == space_.size()) {
    stop_reason_ = "exhausted";
  }
  return stop_requested();
}

GaResult RunState::result() const {
  GaResult r;
  r.archive = archive_.records();
  r.history = history_;
  r.iterations = iterations_;
  r.target_reached = target_reached_;
  r.evaluations_to_target = evaluations_to_target_;
  r.stop_reason = stop_reason_;
  return r;
}

}  // namespace detail

GaResult run_ga(const DesignSpace& space, const Evaluator& evaluator, const GaParams& params,
                const Termination& termination, std::uint64_t seed, const RunOptions& options) {
  params.validate();
  if (space.size() < params.population_size)
    throw std::invalid_argument("design space has " + std::to_string(space.size()) +
                                " designs, fewer than the population size " +
                                std::to_string(params.population_size));
  detail::RunState state(space, evaluator, termination, options);
  const VariationConfig variation = params.variation();

  std::vector<DesignId> population;
  {
    auto rng = make_stream({seed, tag(StreamTag::initial_population)});
    CandidateSampler sampler(space.size());
    population = sampler.draw(params.population_size, {}, rng);
  }
  state.evaluate(population, 0);
  if (state.finish_iteration(0)) return state.result();

  for (std::size_t it = 1;; ++it) {
    auto rng_r = make_stream({seed, it, tag(StreamTag::recombination)});
    auto rng_m = make_stream({seed, it, tag(StreamTag::mutation)});
    auto rng_s = make_stream({seed, it, tag(StreamTag::selection)});

    std::vector<DesignId> p1 = population;
    const auto children_r = recombine(population, space, variation, rng_r);
    p1.insert(p1.end(), children_r.begin(), children_r.end());
    std::vector<DesignId> p2 = p1;
    const auto children_m = mutate(p1, space, variation, rng_m);
    p2.insert(p2.end(), children_m.begin(), children_m.end());

    state.evaluate(p2, it);
    if (state.stop_requested()) {
      state.finish_iteration(it);
      break;
    }
    population = detail::select_population(detail::unique_in_order(p2), state.archive(), state.sense(),
                                           params.selection_pressure, params.population_size, rng_s);
    if (state.finish_iteration(it)) break;
  }
  return state.result();
}

}  // namespace topogen
