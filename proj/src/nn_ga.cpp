#include "topogen/nn_ga.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace topogen {

void NnGaParams::validate() const {
  ga.validate();
  if (learning_set_size < ga.population_size)
    throw std::invalid_argument("learning set size must be at least the population size");
  if (evaluations_per_iteration == 0 || evaluations_per_iteration > ga.mutation_count + ga.recombination_count)
    throw std::invalid_argument("evaluations per iteration must be in [1, mutation count + recombination count]");
  if (variant == nn::Variant::pairwise && eta < 2) throw std::invalid_argument("pairwise reference count must be >= 2");
  if (tuning_trials == 0) throw std::invalid_argument("tuning needs at least one trial");
}

namespace {

nn::Dataset archive_dataset(const Archive& archive) {
  std::vector<Chromosome> xs;
  std::vector<double> ys;
  xs.reserve(archive.size());
  ys.reserve(archive.size());
  for (const auto& r : archive.records()) {
    xs.push_back(r.chromosome);
    ys.push_back(r.fitness);
  }
  return nn::make_dataset(xs, ys);
}

struct ScoredBatch {
  std::vector<double> scores;
  Sense sense = Sense::minimize;
};

ScoredBatch score(const nn::Surrogate& model, const std::vector<DesignId>& ids, const DesignSpace& space,
                  const Archive& archive, Sense sense, std::size_t eta, std::uint64_t seed, std::size_t iteration) {
  ScoredBatch out;
  out.scores.reserve(ids.size());
  if (model.variant() == nn::Variant::feedforward) {
    out.sense = sense;
    for (auto id : ids) out.scores.push_back(model.predict_feedforward(space.chromosome(id)).mean);
    return out;
  }
  out.sense = Sense::maximize;
  std::vector<nn::Reference> refs;
  refs.reserve(archive.size());
  for (const auto& r : archive.records()) refs.push_back({r.chromosome, r.fitness});
  const double best = archive.best(sense).fitness;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    auto rng = make_stream({seed, iteration, tag(StreamTag::prediction), k});
    const auto pred = model.predict_pairwise(space.chromosome(ids[k]), refs, eta, rng);
    out.scores.push_back(nn::prob_better_than_best(pred, best, sense));
  }
  return out;
}

}  // namespace

NnGaResult run_nn_ga(const DesignSpace& space, const Evaluator& evaluator, const NnGaParams& params,
                     const Termination& termination, std::uint64_t seed, const NnRunOptions& options) {
  params.validate();
  if (space.size() < params.learning_set_size)
    throw std::invalid_argument("design space has " + std::to_string(space.size()) +
                                " designs, fewer than the learning set size " +
                                std::to_string(params.learning_set_size));
  detail::RunState state(space, evaluator, termination, options.base);
  const VariationConfig variation = params.ga.variation();
  const Sense sense = evaluator.sense();
  NnGaResult out;

  std::vector<DesignId> learning_set;
  {
    auto rng = make_stream({seed, tag(StreamTag::learning_set)});
    learning_set = CandidateSampler(space.size()).draw(params.learning_set_size, {}, rng);
  }
  state.evaluate(learning_set, 0);
  if (state.finish_iteration(0)) {
    out.ga = state.result();
    return out;
  }

  std::optional<nn::Surrogate> model;
  double model_loss = 0;
  std::size_t trained_on = 0;
  nn::Hyperparams hp;
  const auto retrain = [&](std::size_t iteration) {
    nn::TrainConfig cfg = params.train;
    cfg.seed = derive_seed({seed, iteration, tag(StreamTag::training)});
    trained_on = state.archive().size();
    try {
      auto fitted = nn::train(params.variant, archive_dataset(state.archive()), hp, cfg);
      model_loss = fitted.report.best_val_loss;
      if (params.keep_snapshots) out.snapshots.push_back(fitted.model.to_json());
      model = std::move(fitted.model);
    } catch (const nn::TrainingError&) {
      model.reset();
    }
  };

  {
    const auto data = archive_dataset(state.archive());
    nn::TrainConfig cfg = params.train;
    try {
      out.tuning = nn::tune(data, params.variant, params.tuning_trials, derive_seed({seed, tag(StreamTag::tuning)}),
                            cfg);
      hp = out.tuning->best;
    } catch (const nn::TrainingError&) {
    }
    retrain(0);
  }

  std::vector<DesignId> population;
  {
    auto rng = make_stream({seed, tag(StreamTag::selection)});
    const auto pool = detail::unique_in_order(learning_set);
    population = detail::select_population(pool, state.archive(), sense, params.ga.selection_pressure,
                                           params.ga.population_size, rng);
  }

  for (std::size_t it = 1;; ++it) {
    auto rng_r = make_stream({seed, it, tag(StreamTag::recombination)});
    auto rng_m = make_stream({seed, it, tag(StreamTag::mutation)});
    auto rng_e = make_stream({seed, it, tag(StreamTag::eval_selection)});
    auto rng_s = make_stream({seed, it, tag(StreamTag::selection)});

    std::vector<DesignId> p1 = population;
    const auto children_r = recombine(population, space, variation, rng_r);
    p1.insert(p1.end(), children_r.begin(), children_r.end());
    std::vector<DesignId> p2 = p1;
    const auto children_m = mutate(p1, space, variation, rng_m);
    p2.insert(p2.end(), children_m.begin(), children_m.end());
    const auto offspring = detail::unique_in_order(p2);

    std::vector<DesignId> to_predict;
    for (auto id : offspring)
      if (!state.archive().contains(id)) to_predict.push_back(id);

    NnIterationRecord rec;
    rec.iteration = it;
    rec.n_predicted = to_predict.size();
    const std::size_t budget = std::min(params.evaluations_per_iteration, to_predict.size());
    std::vector<DesignId> chosen;
    if (budget == to_predict.size()) {
      chosen = to_predict;
      if (model) rec.surrogate_val_loss = model_loss;
    } else if (model) {
      rec.surrogate_val_loss = model_loss;
      const auto batch = score(*model, to_predict, space, state.archive(), sense, params.eta, seed, it);
      for (auto i : rank_select_indices(batch.scores, {params.ga.selection_pressure, batch.sense}, budget, rng_e))
        chosen.push_back(to_predict[i]);
    } else {
      rec.fallback = true;
      for (auto i : CandidateSampler(to_predict.size()).draw(budget, {}, rng_e)) chosen.push_back(to_predict[i]);
    }

    rec.n_evaluated = state.evaluate(chosen, it);
    out.iterations.push_back(rec);
    if (options.on_nn_iteration) options.on_nn_iteration(rec);
    if (state.stop_requested()) {
      state.finish_iteration(it);
      break;
    }

    std::vector<DesignId> pool;
    for (auto id : offspring)
      if (state.archive().contains(id)) pool.push_back(id);
    if (pool.size() < params.ga.population_size) {
      std::unordered_set<DesignId> in_pool(pool.begin(), pool.end());
      std::vector<std::size_t> order(state.archive().size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      const auto& recs = state.archive().records();
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return better(recs[a].fitness, recs[b].fitness, sense); });
      for (auto k : order) {
        if (pool.size() >= params.ga.population_size) break;
        if (in_pool.insert(recs[k].design_id).second) pool.push_back(recs[k].design_id);
      }
    }
    population = detail::select_population(pool, state.archive(), sense, params.ga.selection_pressure,
                                           params.ga.population_size, rng_s);

    if (state.archive().size() != trained_on) retrain(it);
    if (state.finish_iteration(it)) break;
  }
  out.ga = state.result();
  return out;
}

}  // namespace topogen
