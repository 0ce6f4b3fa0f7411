#include "creditgrid/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace creditgrid {

std::string_view to_string(AgentKind k) {
  switch (k) {
    case AgentKind::IblEqual: return "ibl-equal";
    case AgentKind::IblExponential: return "ibl-exponential";
    case AgentKind::IblTd: return "ibl-td";
    case AgentKind::QLearning: return "q-learning";
  }
  return "?";
}

AgentKind parse_agent_kind(std::string_view s) {
  for (AgentKind k : kAllAgentKinds) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown agent kind: " + std::string(s));
}

void to_json(nlohmann::json& j, const AgentParams& p) {
  j = nlohmann::json{{"kind", std::string(to_string(p.kind))},
                     {"sigma", p.noise},
                     {"decay", p.decay},
                     {"gamma", p.discount},
                     {"alpha", p.step_size},
                     {"epsilon", p.epsilon},
                     {"default_utility", p.default_utility}};
}

void from_json(const nlohmann::json& j, AgentParams& p) {
  p.kind = parse_agent_kind(j.at("kind").get<std::string>());
  p.noise = j.value("sigma", 0.0);
  p.decay = j.value("decay", 0.0);
  p.discount = j.value("gamma", 0.0);
  p.step_size = j.value("alpha", 0.0);
  p.epsilon = j.value("epsilon", 0.0);
  p.default_utility = j.value("default_utility", 0.4);
}

AgentParams default_params(AgentKind kind, Complexity complexity) {
  const bool simple = complexity == Complexity::Simple;
  AgentParams p;
  p.kind = kind;
  p.noise = 0.0;
  p.decay = 0.0;
  switch (kind) {
    case AgentKind::IblEqual:
      p.noise = 0.25;
      p.decay = 0.5;
      break;
    case AgentKind::IblExponential:
      p.noise = 0.25;
      p.decay = 0.5;
      p.discount = 0.99;
      break;
    case AgentKind::IblTd:
      p.noise = simple ? 0.049 : 0.038;
      p.decay = simple ? 0.95 : 0.886;
      p.discount = simple ? 0.986 : 0.999;
      p.step_size = simple ? 0.824 : 0.838;
      break;
    case AgentKind::QLearning:
      p.discount = simple ? 0.997 : 0.977;
      p.step_size = simple ? 0.839 : 0.865;
      p.epsilon = simple ? 0.002 : 0.022;
      break;
  }
  return p;
}

void learn_equal(const PendingTrajectory& traj, InstanceMemory& mem) {
  for (const PendingStep& s : traj.steps) {
    mem.store_at(s.option, traj.terminal_value ? *traj.terminal_value : s.reward, s.timestamp);
  }
}

void learn_exponential(const PendingTrajectory& traj, InstanceMemory& mem, double discount) {
  if (!traj.terminal_value) {
    learn_equal(traj, mem);
    return;
  }
  const auto length = static_cast<int>(traj.steps.size());
  for (int l = 1; l <= length; ++l) {
    const PendingStep& s = traj.steps[static_cast<std::size_t>(l - 1)];
    mem.store_at(s.option, std::pow(discount, length - l) * *traj.terminal_value, s.timestamp);
  }
}

double learn_td_step(InstanceMemory& mem, const OptionKey& option, double reward, Coord next_state, bool terminal,
                     double discount, double step_size) {
  double current = mem.blended_value(option);
  double bootstrap = 0.0;
  if (!terminal) {
    bootstrap = -std::numeric_limits<double>::infinity();
    for (const OptionKey& k : options_at(next_state)) bootstrap = std::max(bootstrap, mem.blended_value(k));
  }
  double delta = reward + discount * bootstrap - current;
  mem.store(option, current + step_size * delta);
  return delta;
}

double QTable::get(const OptionKey& k) const {
  auto it = values_.find(k);
  return it == values_.end() ? default_value_ : it->second;
}

double QTable::max_at(Coord state) const {
  double best = -std::numeric_limits<double>::infinity();
  for (const OptionKey& k : options_at(state)) best = std::max(best, get(k));
  return best;
}

double learn_q_step(QTable& table, const OptionKey& option, double reward, Coord next_state, bool terminal,
                    double discount, double step_size) {
  double q = table.get(option);
  double bootstrap = terminal ? 0.0 : table.max_at(next_state);
  double delta = reward + discount * bootstrap - q;
  table.set(option, q + step_size * delta);
  return delta;
}

IblAgent::IblAgent(const AgentParams& params, const GridConfig& config, std::uint64_t seed)
    : params_(params), memory_(MemoryParams{params.decay, params.noise, params.default_utility}, seed) {
  if (params.kind == AgentKind::QLearning) throw std::invalid_argument("IblAgent cannot run q-learning");
  std::vector<OptionKey> all;
  all.reserve(static_cast<std::size_t>(config.width * config.height * 4));
  for (int y = 0; y < config.height; ++y)
    for (int x = 0; x < config.width; ++x)
      for (const OptionKey& k : options_at({x, y})) all.push_back(k);
  memory_.prepopulate(all);
}

Direction IblAgent::act(Coord state) {
  auto options = options_at(state);
  return memory_.choose(options).action;
}

void IblAgent::observe(const Transition& tr) {
  OptionKey option{tr.state, tr.action};
  if (params_.kind == AgentKind::IblTd) {
    learn_td_step(memory_, option, tr.reward, tr.next_state, tr.absorbing, params_.discount, params_.step_size);
  } else {
    // Provisional step-cost instance, replaced by the credited outcome at episode end.
    pending_.steps.push_back({option, tr.reward, memory_.clock()});
    memory_.store(option, tr.reward);
  }
  memory_.advance_clock();
}

void IblAgent::end_episode(std::optional<double> target_value) {
  pending_.terminal_value = target_value;
  for (const PendingStep& s : pending_.steps) memory_.retract(s.option, s.reward, s.timestamp);
  if (params_.kind == AgentKind::IblEqual) learn_equal(pending_, memory_);
  if (params_.kind == AgentKind::IblExponential) learn_exponential(pending_, memory_, params_.discount);
  pending_ = {};
}

QLearningAgent::QLearningAgent(const AgentParams& params, std::uint64_t seed)
    : params_(params), table_(params.default_utility), rng_(seed) {}

Direction QLearningAgent::act(Coord state) {
  double u = uniform_open01(rng_);
  if (u < params_.epsilon) return kAllDirections[uniform_index(rng_, kAllDirections.size())];
  std::vector<Direction> best;
  double best_q = -std::numeric_limits<double>::infinity();
  for (const OptionKey& k : options_at(state)) {
    double q = table_.get(k);
    if (q > best_q) {
      best_q = q;
      best.assign(1, k.action);
    } else if (q == best_q) {
      best.push_back(k.action);
    }
  }
  if (best.size() == 1) return best.front();
  return best[uniform_index(rng_, best.size())];
}

void QLearningAgent::observe(const Transition& tr) {
  learn_q_step(table_, {tr.state, tr.action}, tr.reward, tr.next_state, tr.absorbing, params_.discount,
               params_.step_size);
}

std::unique_ptr<Agent> make_agent(const AgentParams& params, const GridConfig& config, std::uint64_t seed) {
  if (params.kind == AgentKind::QLearning) return std::make_unique<QLearningAgent>(params, seed);
  return std::make_unique<IblAgent>(params, config, seed);
}

}  // namespace creditgrid
