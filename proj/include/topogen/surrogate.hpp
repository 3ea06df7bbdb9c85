#pragma once

// Single-hidden-layer ReLU networks used as cheap stand-ins for simulation: a feedforward
// point-estimate variant and a pairwise variant that predicts fitness differences between two
// chromosomes. Trained with mini-batch Adam on MSE with dropout, decoupled weight decay,
// global-norm gradient clipping and early stopping.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "topogen/genetic_ops.hpp"
#include "topogen/rng.hpp"
#include "topogen/topology.hpp"

namespace topogen::nn {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Variant { feedforward, pairwise };
enum class Mode { train, inference };

const char* to_string(Variant v) noexcept;
Variant parse_variant(const std::string& s);

/// Tunable hyperparameters and their random-search ranges.
struct Hyperparams {
  double learning_rate = 1e-3;   // [1e-4, 1e-2], log-uniform
  std::size_t batch_size = 16;   // {8, 16, 32}
  std::size_t hidden_units = 32;  // power of two in [8, 128]
  double dropout_rate = 0.0;     // [0, 0.5]
  double weight_decay = 1e-4;    // [1e-4, 1e-2], log-uniform
  double grad_clip_norm = 5.0;   // [1, 10]

  void validate() const;
  static Hyperparams sample(Rng& rng);
  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct TrainConfig {
  std::size_t max_epochs = 1000;
  std::size_t patience = 20;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  std::size_t pairs_per_point = 4;  // pairwise: ordered pairs sampled per training point per epoch
};

/// x -> w2 · relu(W1 x + b1) + b2
struct Mlp {
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;  // hidden
  Eigen::VectorXd w2;  // hidden
  double b2 = 0;

  Mlp() = default;
  Mlp(std::size_t input_width, std::size_t hidden_units);

  std::size_t input_width() const noexcept { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden_units() const noexcept { return static_cast<std::size_t>(w1.rows()); }

  /// Uniform ±sqrt(6 / (fan_in + fan_out)) per layer, zero biases.
  void initialize(Rng& rng);

  /// Single-sample forward pass. Train mode drops hidden units with probability `dropout_rate`
  /// (inverted dropout) and needs `rng`.
  double forward(std::span<const double> x, Mode mode = Mode::inference, double dropout_rate = 0.0,
                 Rng* rng = nullptr) const;
  /// Inference on every row of `inputs`.
  Eigen::VectorXd forward_batch(const Eigen::MatrixXd& inputs) const;

  std::size_t parameter_count() const noexcept;
};

struct Gradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0;

  double norm() const;
};

/// Mean squared error on a batch and (optionally) its gradient. `dropout_rate` > 0 needs `rng`.
double loss_and_gradients(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                          Gradients* grads, double dropout_rate = 0.0, Rng* rng = nullptr);

/// Rescales `g` to norm `max_norm` if it is larger. Returns the norm before clipping.
double clip_gradients(Gradients& g, double max_norm);

/// Points (rows) with scalar targets.
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;

  std::size_t size() const noexcept { return static_cast<std::size_t>(targets.size()); }
  Dataset subset(std::span<const std::size_t> rows) const;
};

Dataset make_dataset(std::span<const Chromosome> chromosomes, std::span<const double> fitness);

struct Prediction {
  double mean = 0;
  std::optional<double> std;
};

struct Reference {
  Chromosome chromosome;
  double fitness = 0;
};

struct EpochLoss {
  std::size_t epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
};

struct TrainReport {
  std::vector<EpochLoss> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0;  // standardized units

  std::string to_csv() const;
};

/// A trained network plus target standardization and the hyperparameters it was trained with.
class Surrogate {
 public:
  Surrogate() = default;
  Surrogate(Variant variant, Mlp net, Hyperparams hp, double target_mean, double target_scale);

  Variant variant() const noexcept { return variant_; }
  const Mlp& net() const noexcept { return net_; }
  Mlp& net() noexcept { return net_; }
  const Hyperparams& hyperparams() const noexcept { return hp_; }
  double target_mean() const noexcept { return mean_; }
  double target_scale() const noexcept { return scale_; }
  /// Chromosome width the network was built for.
  std::size_t chromosome_width() const noexcept;

  Prediction predict_feedforward(const Chromosome& c) const;
  /// Compares `u` against min(η, |references|) distinct references drawn from `rng`.
  Prediction predict_pairwise(const Chromosome& u, std::span<const Reference> references, std::size_t eta,
                              Rng& rng) const;

  std::string to_json() const;
  static Surrogate from_json(const std::string& text);

 private:
  Variant variant_ = Variant::feedforward;
  Mlp net_;
  Hyperparams hp_;
  double mean_ = 0;
  double scale_ = 1;
};

struct FitResult {
  Surrogate model;
  TrainReport report;
};

/// Trains on `train`, early-stopping on `validation` (falls back to training loss if empty).
FitResult fit(Variant variant, const Dataset& train, const Dataset& validation, const Hyperparams& hp,
              const TrainConfig& cfg);

/// Splits `data` by cfg.validation_fraction (shuffled with cfg.seed) and fits.
FitResult train(Variant variant, const Dataset& data, const Hyperparams& hp, const TrainConfig& cfg);

/// `count` ordered pairs (i, u) drawn uniformly from [0, n)², self-pairs included.
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t n, std::size_t count, Rng& rng);

/// Shuffled split: returns (train rows, validation rows).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t n, double validation_fraction,
                                                                        Rng& rng);

/// P(outcome better than `best`) with the outcome ~ Normal(mean, std^2).
double prob_better_than_best(const Prediction& pred, double best, Sense sense);

struct TuneTrial {
  Hyperparams hp;
  double val_loss = 0;
};

struct TuneResult {
  Hyperparams best;
  std::size_t best_trial = 0;
  std::vector<TuneTrial> trials;
};

using HyperparamSampler = std::function<Hyperparams(Rng&)>;

/// Random search: one fixed 80/20 split, `trials` sampled configurations, lowest validation loss wins
/// (earliest trial on ties).
TuneResult tune(const Dataset& data, Variant variant, std::size_t trials, std::uint64_t seed,
                const TrainConfig& base = {}, const HyperparamSampler& sampler = Hyperparams::sample);

}  // namespace topogen::nn
