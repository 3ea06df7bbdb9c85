#pragma once

// Exponential rank-based selection and similarity-based variation over an
// enumerated feasible set. Offspring are always members of F, so no repair or
// feasibility check is ever needed.

#include <cstddef>
#include <span>
#include <vector>

#include "topogen/rng.hpp"
#include "topogen/topology.hpp"

namespace topogen {

enum class Sense { minimize, maximize };

const char* to_string(Sense s) noexcept;

/// True if `a` is strictly better than `b` under `sense`.
inline bool better(double a, double b, Sense sense) noexcept {
  return sense == Sense::minimize ? a < b : a > b;
}

struct RankSelectConfig {
  double pressure = 1.3;
  Sense sense = Sense::minimize;  // which scores count as better
};

struct VariationConfig {
  double mutation_pressure = 1.3;
  double recombination_pressure = 2.0;
  std::size_t mutation_count = 30;
  std::size_t recombination_count = 10;
  std::size_t candidate_pool_size = 20000;

  void validate() const;
};

/// Unnormalized selection weight e^{α(r-1)} - 1 of rank r in a pool of N (rank N is best).
/// Overflows to +inf for large α·N; rank_select works with rescaled weights instead.
double exp_rank_weight(std::size_t rank, double pressure, std::size_t pool_size);

/// Normalized selection probabilities for ranks 1..N. Sums to 1 for N >= 2;
/// {1} for N == 1.
std::vector<double> rank_probabilities(double pressure, std::size_t pool_size);

/// Draws one index of `scores` with probability proportional to the exponential rank weight.
/// Ties are ordered by position: an earlier entry ranks above a later one with equal score.
std::size_t rank_select_one(std::span<const double> scores, const RankSelectConfig& cfg, Rng& rng);

/// Selects min(count, |scores|) distinct indices without replacement, re-ranking the remaining
/// items each round. Returned in selection order.
std::vector<std::size_t> rank_select_indices(std::span<const double> scores, const RankSelectConfig& cfg,
                                             std::size_t count, Rng& rng);

template <class T, class ScoreFn>
std::vector<T> rank_select(std::span<const T> pool, ScoreFn&& score, const RankSelectConfig& cfg,
                           std::size_t count, Rng& rng) {
  std::vector<double> scores;
  scores.reserve(pool.size());
  for (const auto& item : pool) scores.push_back(static_cast<double>(score(item)));
  std::vector<T> out;
  for (auto i : rank_select_indices(scores, cfg, count, rng)) out.push_back(pool[i]);
  return out;
}

/// Uniform sampling of candidate subsets of F without replacement. Scratch state is restored
/// after each draw, so results depend only on the random stream.
class CandidateSampler {
 public:
  explicit CandidateSampler(std::size_t universe);

  /// min(k, |eligible|) distinct ids from [0, universe) \ excluded, in random order.
  /// `excluded` must be sorted and unique.
  std::vector<DesignId> draw(std::size_t k, std::span<const DesignId> excluded, Rng& rng);

 private:
  std::vector<DesignId> pool_;
  std::vector<std::pair<std::size_t, std::size_t>> swaps_;
};

/// γ_m offspring. Each: uniform parent p from `population`, uniform candidate set C from F
/// excluding the population, child chosen by rank on Hamming(p, c) (closer ranks higher).
std::vector<DesignId> mutate(std::span<const DesignId> population, const DesignSpace& space,
                             const VariationConfig& cfg, Rng& rng);

/// γ_r offspring, scored by the mean Hamming distance to two distinct uniform parents.
std::vector<DesignId> recombine(std::span<const DesignId> population, const DesignSpace& space,
                                const VariationConfig& cfg, Rng& rng);

}  // namespace topogen
