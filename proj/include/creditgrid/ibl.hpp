#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "creditgrid/rng.hpp"
#include "creditgrid/types.hpp"

namespace creditgrid {

/// A (state, action) pair; ordered so iteration over options is deterministic.
struct OptionKey {
  Coord state;
  Direction action = Direction::Up;

  auto operator<=>(const OptionKey&) const = default;
  bool operator==(const OptionKey&) const = default;
};

std::array<OptionKey, 4> options_at(Coord state);

/// Outcomes equal after rounding to this many decimal digits share one instance.
inline constexpr double kOutcomeResolution = 1e-12;

struct Instance {
  double outcome = 0.0;
  std::int64_t outcome_key = 0;
  std::vector<std::int64_t> timestamps;  // strictly ascending
};

struct MemoryParams {
  double decay = 0.5;
  double noise = 0.25;
  double default_utility = 0.4;
};

/// Boltzmann retrieval weights for a set of activations. noise == 0 is the
/// deterministic limit: all mass on the maximal activation, ties split evenly.
std::vector<double> retrieval_weights(std::span<const double> activations, double noise);

/// Decay-weighted recency/frequency strength without the noise term.
double base_activation(std::span<const std::int64_t> timestamps, std::int64_t now, double decay);

/// Logistic noise term for a uniform draw xi in (0,1).
inline double activation_noise(double noise, double xi) { return noise * std::log((1.0 - xi) / xi); }

/// Per-agent instance store. Noise draws consume the internal stream in a fixed
/// order: options in the order they are queried, instances by ascending outcome.
class InstanceMemory {
 public:
  InstanceMemory(MemoryParams params, std::uint64_t seed);

  const MemoryParams& params() const { return params_; }
  std::int64_t clock() const { return clock_; }
  double temperature() const;

  /// Seeds every option with one default-utility instance at timestamp 0.
  void prepopulate(std::span<const OptionKey> options);

  /// Records an observation at the current clock.
  void store(const OptionKey& option, double outcome) { store_at(option, outcome, clock_); }
  /// Records an observation at an earlier (or current) timestamp.
  void store_at(const OptionKey& option, double outcome, std::int64_t timestamp);

  /// Removes one timestamp from the (option, outcome) instance, dropping the
  /// instance if it has none left. Returns false if nothing matched.
  bool retract(const OptionKey& option, double outcome, std::int64_t timestamp);

  void advance_clock() { ++clock_; }

  double activation(const Instance& inst);
  double activation(const Instance& inst, double xi) const;

  std::vector<std::pair<const Instance*, double>> retrieval_probs(const OptionKey& option);
  double blended_value(const OptionKey& option);
  OptionKey choose(std::span<const OptionKey> options);

  /// Empty span when the option has never been seen.
  std::span<const Instance> instances(const OptionKey& option) const;
  std::size_t option_count() const { return memory_.size(); }
  std::size_t instance_count() const;

  Rng& rng() { return rng_; }

  nlohmann::json snapshot() const;

 private:
  MemoryParams params_;
  std::int64_t clock_ = 1;
  Rng rng_;
  std::map<OptionKey, std::vector<Instance>> memory_;
};

}  // namespace creditgrid
