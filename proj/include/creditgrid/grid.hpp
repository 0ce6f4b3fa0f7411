#pragma once

#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "creditgrid/types.hpp"

namespace creditgrid {

inline constexpr int kMaxSteps = 31;
inline constexpr double kStepCost = -0.01;
inline constexpr double kCollisionPenalty = -0.05;
/// Collision steps pay the step cost on top of the collision penalty.
inline constexpr bool kCollisionStacksStepCost = true;
inline constexpr double kCollisionReward = kCollisionStacksStepCost ? -0.06 : kCollisionPenalty;
inline constexpr int kUnreachable = std::numeric_limits<int>::max();

struct Target {
  Coord pos;
  double value = 0.0;

  bool operator==(const Target&) const = default;
};

/// Immutable task definition.
struct GridConfig {
  std::string id;
  int width = 11;
  int height = 11;
  std::set<Coord> obstacles;
  std::vector<Target> targets;
  Coord spawn;
  Complexity complexity = Complexity::Simple;

  bool in_bounds(Coord c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool is_obstacle(Coord c) const { return obstacles.count(c) != 0; }
  bool is_free(Coord c) const { return in_bounds(c) && !is_obstacle(c); }
  std::optional<std::size_t> target_at(Coord c) const;
  /// Index of the highest-value target.
  std::size_t preferred_target() const;
  /// Target indices ordered by value, highest first.
  std::vector<std::size_t> targets_by_rank() const;
  /// 1-based value rank of a target (1 = preferred).
  int rank_of(std::size_t target_index) const;

  bool operator==(const GridConfig&) const = default;
};

struct EnvState {
  Coord position;
  int step_index = 0;  // steps taken so far in this episode
  double accumulated_score = 0.0;
  bool terminated = false;
  std::optional<std::size_t> consumed_target;
};

struct StepOutcome {
  Coord new_position;
  double reward = 0.0;
  bool collided = false;
  bool terminal = false;
};

EnvState initial_state(const GridConfig& config);

/// Applies one move. Throws ContractViolation when the state is already terminated.
std::pair<EnvState, StepOutcome> step(const GridConfig& config, const EnvState& state, Direction action);

/// BFS distances from `from` over free cells; kUnreachable marks cells with no path.
/// Indexed y * width + x.
std::vector<int> distances_from(const GridConfig& config, Coord from);

int shortest_path_len(const GridConfig& config, Coord from, Coord to);

/// Number of free cells reachable from spawn.
int accessible_cells(const GridConfig& config);

/// Closest non-preferred target by shortest path (ties by index).
std::size_t closest_distractor(const GridConfig& config);

void to_json(nlohmann::json& j, const GridConfig& c);
void from_json(const nlohmann::json& j, GridConfig& c);

std::string to_json_string(const GridConfig& c);
GridConfig load_config(const std::string& path);
void save_config(const GridConfig& c, const std::string& path);
/// Loads every *.json in a directory except manifest.json, sorted by id.
std::vector<GridConfig> load_config_dir(const std::string& dir);

}  // namespace creditgrid
