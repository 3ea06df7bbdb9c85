#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace topogen {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Folds a sequence of integers into a single well-mixed 64-bit seed. Order matters.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept;

/// A random stream keyed by (seed, parts...). Streams with distinct keys are independent
/// for all practical purposes, which lets callers split work without sharing an engine.
Rng make_stream(std::initializer_list<std::uint64_t> parts);

// Operator tags for stream splitting.
enum class StreamTag : std::uint64_t {
  initial_population = 1,
  recombination = 2,
  mutation = 3,
  selection = 4,
  learning_set = 5,
  prediction = 6,
  eval_selection = 7,
  training = 8,
  tuning = 9,
  run = 10,
  simulation = 11,
  fallback = 12,
};

inline std::uint64_t tag(StreamTag t) noexcept { return static_cast<std::uint64_t>(t); }

}  // namespace topogen
