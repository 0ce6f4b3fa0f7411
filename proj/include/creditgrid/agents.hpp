#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "creditgrid/grid.hpp"
#include "creditgrid/ibl.hpp"

namespace creditgrid {

enum class AgentKind : std::uint8_t { IblEqual, IblExponential, IblTd, QLearning };

inline constexpr std::array<AgentKind, 4> kAllAgentKinds = {AgentKind::IblEqual, AgentKind::IblExponential,
                                                            AgentKind::IblTd, AgentKind::QLearning};

std::string_view to_string(AgentKind k);
/// Accepts the CLI spellings: ibl-equal, ibl-exponential, ibl-td, q-learning.
AgentKind parse_agent_kind(std::string_view s);

/// Every field is kept regardless of kind so configs round-trip unchanged.
struct AgentParams {
  AgentKind kind = AgentKind::IblEqual;
  double noise = 0.25;  // sigma
  double decay = 0.5;   // d
  double discount = 0.0;  // gamma
  double step_size = 0.0;  // alpha
  double epsilon = 0.0;
  double default_utility = 0.4;

  bool operator==(const AgentParams&) const = default;
};

void to_json(nlohmann::json& j, const AgentParams& p);
void from_json(const nlohmann::json& j, AgentParams& p);

/// Published default settings per model and condition.
AgentParams default_params(AgentKind kind, Complexity complexity);

struct PendingStep {
  OptionKey option;
  double reward = 0.0;
  std::int64_t timestamp = 0;
};

struct PendingTrajectory {
  std::vector<PendingStep> steps;
  std::optional<double> terminal_value;  // value of the consumed target, if any
};

/// Hit: every step stores the target value. Miss: every step stores its own reward.
void learn_equal(const PendingTrajectory& traj, InstanceMemory& mem);

/// Hit: step l of T stores gamma^(T-l) * R_T. Miss: as learn_equal.
void learn_exponential(const PendingTrajectory& traj, InstanceMemory& mem, double discount);

/// One IBL-TD update at the current clock. The bootstrap term is dropped when
/// `terminal`. Noise draws: V(S,A) first, then S_next's options in action order.
double learn_td_step(InstanceMemory& mem, const OptionKey& option, double reward, Coord next_state, bool terminal,
                     double discount, double step_size);

class QTable {
 public:
  explicit QTable(double default_value = 0.4) : default_value_(default_value) {}

  double get(const OptionKey& k) const;
  void set(const OptionKey& k, double v) { values_[k] = v; }
  double max_at(Coord state) const;
  std::size_t size() const { return values_.size(); }
  double default_value() const { return default_value_; }

 private:
  double default_value_;
  std::map<OptionKey, double> values_;
};

double learn_q_step(QTable& table, const OptionKey& option, double reward, Coord next_state, bool terminal,
                    double discount, double step_size);

struct Transition {
  Coord state;
  Direction action = Direction::Up;
  double reward = 0.0;
  Coord next_state;
  bool collided = false;
  /// True only when a target was consumed; time-limit endings still bootstrap.
  bool absorbing = false;
};

/// Uniform interface driven by the episode loop. Per-step learners update in
/// observe(); episodic learners hold provisional step-cost instances during the
/// episode and assign credited outcomes in end_episode().
class Agent {
 public:
  virtual ~Agent() = default;

  virtual Direction act(Coord state) = 0;
  virtual void observe(const Transition& tr) = 0;
  virtual void end_episode(std::optional<double> target_value) = 0;

  virtual const AgentParams& params() const = 0;
  AgentKind kind() const { return params().kind; }
};

class IblAgent : public Agent {
 public:
  IblAgent(const AgentParams& params, const GridConfig& config, std::uint64_t seed);

  Direction act(Coord state) override;
  void observe(const Transition& tr) override;
  void end_episode(std::optional<double> target_value) override;
  const AgentParams& params() const override { return params_; }

  InstanceMemory& memory() { return memory_; }
  const InstanceMemory& memory() const { return memory_; }

 private:
  AgentParams params_;
  InstanceMemory memory_;
  PendingTrajectory pending_;
};

class QLearningAgent : public Agent {
 public:
  QLearningAgent(const AgentParams& params, std::uint64_t seed);

  Direction act(Coord state) override;
  void observe(const Transition& tr) override;
  void end_episode(std::optional<double>) override {}
  const AgentParams& params() const override { return params_; }

  QTable& table() { return table_; }

 private:
  AgentParams params_;
  QTable table_;
  Rng rng_;
};

std::unique_ptr<Agent> make_agent(const AgentParams& params, const GridConfig& config, std::uint64_t seed);

}  // namespace creditgrid
