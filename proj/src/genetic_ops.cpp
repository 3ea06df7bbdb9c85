#include "topogen/genetic_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace topogen {

const char* to_string(Sense s) noexcept { return s == Sense::minimize ? "minimize" : "maximize"; }

void VariationConfig::validate() const {
  if (!(mutation_pressure > 0) || !(recombination_pressure > 0))
    throw std::invalid_argument("variation pressures must be positive");
  if (mutation_count == 0 || recombination_count == 0 || candidate_pool_size == 0)
    throw std::invalid_argument("variation counts and candidate pool size must be positive");
}

double exp_rank_weight(std::size_t rank, double pressure, std::size_t pool_size) {
  if (pool_size == 0 || rank < 1 || rank > pool_size)
    throw std::out_of_range("rank " + std::to_string(rank) + " outside [1, " + std::to_string(pool_size) + "]");
  if (!(pressure > 0)) throw std::invalid_argument("selection pressure must be positive");
  return std::expm1(pressure * static_cast<double>(rank - 1));
}

namespace {

// Weight of the item k places below the best in a pool of m, divided by e^{α(m-1)}.
// Same ratios as exp_rank_weight without overflow.
inline double scaled_weight(std::size_t k, std::size_t m, double pressure) {
  const double w = std::exp(-pressure * static_cast<double>(k)) -
                   std::exp(-pressure * static_cast<double>(m - 1));
  return w > 0 ? w : 0.0;
}

// Offset from the best item of a single draw among m ranked items.
std::size_t sample_offset(std::size_t m, double pressure, Rng& rng) {
  if (m == 1) return 0;
  double total = 0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const double w = scaled_weight(k, m, pressure);
    if (w == 0) break;
    total += w;
  }
  std::uniform_real_distribution<double> u(0.0, total);
  const double target = u(rng);
  double acc = 0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const double w = scaled_weight(k, m, pressure);
    if (w == 0) break;
    last_positive = k;
    acc += w;
    if (target < acc) return k;
  }
  return last_positive;
}

void check_config(const RankSelectConfig& cfg) {
  if (!(cfg.pressure > 0)) throw std::invalid_argument("selection pressure must be positive");
}

void check_scores(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("rank selection on an empty pool");
  for (double s : scores)
    if (std::isnan(s)) throw std::invalid_argument("rank selection score is NaN");
}

}  // namespace

std::vector<double> rank_probabilities(double pressure, std::size_t pool_size) {
  if (pool_size == 0) throw std::invalid_argument("empty pool");
  if (!(pressure > 0)) throw std::invalid_argument("selection pressure must be positive");
  std::vector<double> p(pool_size, 0.0);
  if (pool_size == 1) {
    p[0] = 1.0;
    return p;
  }
  double total = 0;
  for (std::size_t r = 1; r <= pool_size; ++r) {
    p[r - 1] = scaled_weight(pool_size - r, pool_size, pressure);
    total += p[r - 1];
  }
  for (auto& x : p) x /= total;
  return p;
}

std::size_t rank_select_one(std::span<const double> scores, const RankSelectConfig& cfg, Rng& rng) {
  check_config(cfg);
  check_scores(scores);
  const std::size_t n = scores.size();
  const std::size_t k = sample_offset(n, cfg.pressure, rng);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto ahead = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return better(scores[a], scores[b], cfg.sense);
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), ahead);
  return order[k];
}

std::vector<std::size_t> rank_select_indices(std::span<const double> scores, const RankSelectConfig& cfg,
                                             std::size_t count, Rng& rng) {
  check_config(cfg);
  check_scores(scores);
  if (count == 0) throw std::invalid_argument("rank selection count must be at least 1");
  std::vector<std::size_t> ranked(scores.size());
  std::iota(ranked.begin(), ranked.end(), 0);
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
    return better(scores[a], scores[b], cfg.sense);
  });
  std::vector<std::size_t> chosen;
  const std::size_t rounds = std::min(count, scores.size());
  chosen.reserve(rounds);
  for (std::size_t round = 0; round < rounds; ++round) {
    const std::size_t k = sample_offset(ranked.size(), cfg.pressure, rng);
    chosen.push_back(ranked[k]);
    ranked.erase(ranked.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return chosen;
}

CandidateSampler::CandidateSampler(std::size_t universe) : pool_(universe) {
  std::iota(pool_.begin(), pool_.end(), DesignId{0});
}

std::vector<DesignId> CandidateSampler::draw(std::size_t k, std::span<const DesignId> excluded, Rng& rng) {
  const std::size_t universe = pool_.size();
  const auto in_range = static_cast<std::size_t>(
      std::lower_bound(excluded.begin(), excluded.end(), static_cast<DesignId>(universe)) - excluded.begin());
  const std::size_t eligible = universe - in_range;
  const std::size_t want = std::min(k, eligible);
  std::vector<DesignId> out;
  if (want == 0) return out;
  out.reserve(want);

  // A uniform ordered prefix of F, filtered, is a uniform ordered subset of the eligible ids.
  const std::size_t prefix = std::min(want + in_range, universe);
  swaps_.clear();
  for (std::size_t i = 0; i < prefix; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, universe - 1);
    const std::size_t j = pick(rng);
    std::swap(pool_[i], pool_[j]);
    swaps_.emplace_back(i, j);
  }
  for (std::size_t i = 0; i < prefix && out.size() < want; ++i)
    if (!std::binary_search(excluded.begin(), excluded.end(), pool_[i])) out.push_back(pool_[i]);
  for (auto it = swaps_.rbegin(); it != swaps_.rend(); ++it) std::swap(pool_[it->first], pool_[it->second]);
  return out;
}

namespace {

std::vector<DesignId> sorted_unique(std::span<const DesignId> ids) {
  std::vector<DesignId> v(ids.begin(), ids.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// C per offspring: F minus the population; if that is empty, F minus the parents.
std::vector<DesignId> candidates_for(CandidateSampler& sampler, std::size_t pool_size,
                                     const std::vector<DesignId>& population_excl,
                                     std::span<const DesignId> parents, Rng& rng) {
  auto c = sampler.draw(pool_size, population_excl, rng);
  if (c.empty()) c = sampler.draw(pool_size, sorted_unique(parents), rng);
  if (c.empty()) throw std::invalid_argument("no candidate differs from the parents");
  return c;
}

}  // namespace

std::vector<DesignId> mutate(std::span<const DesignId> population, const DesignSpace& space,
                             const VariationConfig& cfg, Rng& rng) {
  cfg.validate();
  if (population.empty()) throw std::invalid_argument("mutate: empty population");
  if (space.size() < 2) throw std::invalid_argument("mutate: design space has fewer than 2 designs");
  const auto excluded = sorted_unique(population);
  CandidateSampler sampler(space.size());
  std::uniform_int_distribution<std::size_t> pick_parent(0, population.size() - 1);
  const RankSelectConfig select{cfg.mutation_pressure, Sense::minimize};

  std::vector<DesignId> offspring;
  offspring.reserve(cfg.mutation_count);
  std::vector<double> scores;
  for (std::size_t i = 0; i < cfg.mutation_count; ++i) {
    const DesignId parent = population[pick_parent(rng)];
    const auto c = candidates_for(sampler, cfg.candidate_pool_size, excluded, {&parent, 1}, rng);
    const auto& pc = space.chromosome(parent);
    scores.clear();
    for (auto id : c) scores.push_back(static_cast<double>(hamming(pc, space.chromosome(id))));
    offspring.push_back(c[rank_select_one(scores, select, rng)]);
  }
  return offspring;
}

std::vector<DesignId> recombine(std::span<const DesignId> population, const DesignSpace& space,
                                const VariationConfig& cfg, Rng& rng) {
  cfg.validate();
  if (population.size() < 2) throw std::invalid_argument("recombine: population needs at least 2 members");
  if (space.size() < 2) throw std::invalid_argument("recombine: design space has fewer than 2 designs");
  const auto excluded = sorted_unique(population);
  CandidateSampler sampler(space.size());
  std::uniform_int_distribution<std::size_t> pick_first(0, population.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_second(0, population.size() - 2);
  const RankSelectConfig select{cfg.recombination_pressure, Sense::minimize};

  std::vector<DesignId> offspring;
  offspring.reserve(cfg.recombination_count);
  std::vector<double> scores;
  for (std::size_t i = 0; i < cfg.recombination_count; ++i) {
    const std::size_t a = pick_first(rng);
    std::size_t b = pick_second(rng);
    if (b >= a) ++b;
    const DesignId parents[2] = {population[a], population[b]};
    const auto c = candidates_for(sampler, cfg.candidate_pool_size, excluded, parents, rng);
    const auto& c1 = space.chromosome(parents[0]);
    const auto& c2 = space.chromosome(parents[1]);
    scores.clear();
    for (auto id : c) {
      const auto& cc = space.chromosome(id);
      scores.push_back(0.5 * static_cast<double>(hamming(c1, cc)) + 0.5 * static_cast<double>(hamming(c2, cc)));
    }
    offspring.push_back(c[rank_select_one(scores, select, rng)]);
  }
  return offspring;
}

}  // namespace topogen
