#pragma once

// Surrogate-assisted GA: offspring are scored by a neural network and only the most promising
// ones are simulated each iteration. The network is retrained on the archive after every batch.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "topogen/ga.hpp"
#include "topogen/surrogate.hpp"

namespace topogen {

struct NnGaParams {
  GaParams ga{1.3, 1.3, 2.0, 30, 20000, 250, 50};
  std::size_t learning_set_size = 100;         // ε
  std::size_t evaluations_per_iteration = 40;  // φ
  nn::Variant variant = nn::Variant::feedforward;
  std::size_t eta = 30;  // pairwise reference count
  std::size_t tuning_trials = 50;
  nn::TrainConfig train;
  bool keep_snapshots = false;

  void validate() const;
};

struct NnIterationRecord {
  std::size_t iteration = 0;
  std::optional<double> surrogate_val_loss;  // model that scored this iteration's offspring
  std::size_t n_predicted = 0;
  std::size_t n_evaluated = 0;
  bool fallback = false;  // no usable model; a random subset was simulated
};

struct NnRunOptions {
  RunOptions base;
  std::function<void(const NnIterationRecord&)> on_nn_iteration;
};

struct NnGaResult {
  GaResult ga;
  std::vector<NnIterationRecord> iterations;
  std::optional<nn::TuneResult> tuning;
  std::vector<std::string> snapshots;  // JSON, one per (re)train, when keep_snapshots is set
};

NnGaResult run_nn_ga(const DesignSpace& space, const Evaluator& evaluator, const NnGaParams& params,
                     const Termination& termination, std::uint64_t seed, const NnRunOptions& options = {});

}  // namespace topogen
