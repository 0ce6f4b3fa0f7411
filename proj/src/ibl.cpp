#include "creditgrid/ibl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace creditgrid {

std::array<OptionKey, 4> options_at(Coord state) {
  return {OptionKey{state, Direction::Up}, OptionKey{state, Direction::Down}, OptionKey{state, Direction::Left},
          OptionKey{state, Direction::Right}};
}

std::vector<double> retrieval_weights(std::span<const double> activations, double noise) {
  std::vector<double> p(activations.size(), 0.0);
  if (activations.empty()) return p;
  double top = *std::max_element(activations.begin(), activations.end());
  if (noise <= 0.0) {
    auto ties = std::count(activations.begin(), activations.end(), top);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (activations[i] == top) p[i] = 1.0 / static_cast<double>(ties);
    }
    return p;
  }
  double tau = noise * std::sqrt(2.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp((activations[i] - top) / tau);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

double base_activation(std::span<const std::int64_t> timestamps, std::int64_t now, double decay) {
  double strength = 0.0;
  for (std::int64_t ts : timestamps) {
    if (ts >= now) throw ContractViolation("instance timestamp is not in the past");
    strength += std::pow(static_cast<double>(now - ts), -decay);
  }
  return std::log(strength);
}

InstanceMemory::InstanceMemory(MemoryParams params, std::uint64_t seed) : params_(params), rng_(seed) {
  if (!(params_.decay > 0.0)) throw std::invalid_argument("decay must be positive");
  if (params_.noise < 0.0) throw std::invalid_argument("noise must be non-negative");
}

double InstanceMemory::temperature() const { return params_.noise * std::sqrt(2.0); }

void InstanceMemory::prepopulate(std::span<const OptionKey> options) {
  if (!memory_.empty()) throw ContractViolation("prepopulate requires a fresh memory");
  for (const OptionKey& k : options) store_at(k, params_.default_utility, 0);
  clock_ = 1;
}

void InstanceMemory::store_at(const OptionKey& option, double outcome, std::int64_t timestamp) {
  if (timestamp > clock_) throw ContractViolation("cannot store an instance in the future");
  auto key = static_cast<std::int64_t>(std::llround(outcome / kOutcomeResolution));
  auto& bucket = memory_[option];
  auto it = std::lower_bound(bucket.begin(), bucket.end(), key,
                             [](const Instance& inst, std::int64_t k) { return inst.outcome_key < k; });
  if (it != bucket.end() && it->outcome_key == key) {
    auto& ts = it->timestamps;
    auto pos = std::lower_bound(ts.begin(), ts.end(), timestamp);
    if (pos == ts.end() || *pos != timestamp) ts.insert(pos, timestamp);
    return;
  }
  bucket.insert(it, Instance{outcome, key, {timestamp}});
}

bool InstanceMemory::retract(const OptionKey& option, double outcome, std::int64_t timestamp) {
  auto found = memory_.find(option);
  if (found == memory_.end()) return false;
  auto key = static_cast<std::int64_t>(std::llround(outcome / kOutcomeResolution));
  auto& bucket = found->second;
  auto it = std::lower_bound(bucket.begin(), bucket.end(), key,
                             [](const Instance& inst, std::int64_t k) { return inst.outcome_key < k; });
  if (it == bucket.end() || it->outcome_key != key) return false;
  auto pos = std::lower_bound(it->timestamps.begin(), it->timestamps.end(), timestamp);
  if (pos == it->timestamps.end() || *pos != timestamp) return false;
  it->timestamps.erase(pos);
  if (it->timestamps.empty()) bucket.erase(it);
  return true;
}

double InstanceMemory::activation(const Instance& inst) {
  double xi = uniform_open01(rng_);
  return activation(inst, xi);
}

double InstanceMemory::activation(const Instance& inst, double xi) const {
  return base_activation(inst.timestamps, clock_, params_.decay) + activation_noise(params_.noise, xi);
}

std::vector<std::pair<const Instance*, double>> InstanceMemory::retrieval_probs(const OptionKey& option) {
  auto found = memory_.find(option);
  if (found == memory_.end() || found->second.empty()) {
    throw ContractViolation("retrieval on an option with no instances");
  }
  const auto& bucket = found->second;
  std::vector<double> acts;
  acts.reserve(bucket.size());
  for (const Instance& inst : bucket) acts.push_back(activation(inst));
  auto p = retrieval_weights(acts, params_.noise);
  std::vector<std::pair<const Instance*, double>> out;
  out.reserve(bucket.size());
  for (std::size_t i = 0; i < bucket.size(); ++i) out.emplace_back(&bucket[i], p[i]);
  return out;
}

double InstanceMemory::blended_value(const OptionKey& option) {
  auto probs = retrieval_probs(option);
  double value = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& [inst, p] : probs) {
    value += p * inst->outcome;
    lo = std::min(lo, inst->outcome);
    hi = std::max(hi, inst->outcome);
  }
  return std::clamp(value, lo, hi);
}

OptionKey InstanceMemory::choose(std::span<const OptionKey> options) {
  if (options.empty()) throw ContractViolation("choose needs at least one option");
  std::vector<std::size_t> best;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < options.size(); ++i) {
    double v = blended_value(options[i]);
    if (v > best_value) {
      best_value = v;
      best.assign(1, i);
    } else if (v == best_value) {
      best.push_back(i);
    }
  }
  if (best.size() == 1) return options[best.front()];
  return options[best[uniform_index(rng_, best.size())]];
}

std::span<const Instance> InstanceMemory::instances(const OptionKey& option) const {
  auto it = memory_.find(option);
  if (it == memory_.end()) return {};
  return it->second;
}

std::size_t InstanceMemory::instance_count() const {
  std::size_t n = 0;
  for (const auto& [k, bucket] : memory_) n += bucket.size();
  return n;
}

nlohmann::json InstanceMemory::snapshot() const {
  auto out = nlohmann::json::array();
  for (const auto& [k, bucket] : memory_) {
    for (const Instance& inst : bucket) {
      out.push_back({{"state", {k.state.x, k.state.y}},
                     {"action", std::string(to_string(k.action))},
                     {"outcome", inst.outcome},
                     {"timestamps", inst.timestamps}});
    }
  }
  return out;
}

}  // namespace creditgrid
