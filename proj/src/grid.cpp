#include "creditgrid/grid.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace creditgrid {

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Left: return "left";
    case Direction::Right: return "right";
  }
  return "?";
}

Direction parse_direction(std::string_view s) {
  for (Direction d : kAllDirections) {
    if (to_string(d) == s) return d;
  }
  throw std::invalid_argument("unknown direction: " + std::string(s));
}

std::string_view to_string(Complexity c) { return c == Complexity::Simple ? "simple" : "complex"; }

Complexity parse_complexity(std::string_view s) {
  if (s == "simple") return Complexity::Simple;
  if (s == "complex") return Complexity::Complex;
  throw std::invalid_argument("unknown complexity: " + std::string(s));
}

std::optional<std::size_t> GridConfig::target_at(Coord c) const {
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].pos == c) return i;
  }
  return std::nullopt;
}

std::size_t GridConfig::preferred_target() const {
  if (targets.empty()) throw ContractViolation("config has no targets");
  std::size_t best = 0;
  for (std::size_t i = 1; i < targets.size(); ++i) {
    if (targets[i].value > targets[best].value) best = i;
  }
  return best;
}

std::vector<std::size_t> GridConfig::targets_by_rank() const {
  std::vector<std::size_t> order(targets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return targets[a].value > targets[b].value; });
  return order;
}

int GridConfig::rank_of(std::size_t target_index) const {
  auto order = targets_by_rank();
  auto it = std::find(order.begin(), order.end(), target_index);
  if (it == order.end()) throw ContractViolation("target index out of range");
  return static_cast<int>(it - order.begin()) + 1;
}

EnvState initial_state(const GridConfig& config) {
  EnvState s;
  s.position = config.spawn;
  return s;
}

std::pair<EnvState, StepOutcome> step(const GridConfig& config, const EnvState& state, Direction action) {
  if (state.terminated) throw ContractViolation("step on a terminated episode");
  if (state.step_index >= kMaxSteps) throw ContractViolation("step limit already reached");

  EnvState next = state;
  StepOutcome out;
  next.step_index += 1;

  Coord attempted = offset(state.position, action);
  if (!config.is_free(attempted)) {
    out.new_position = state.position;
    out.collided = true;
    out.reward = kCollisionReward;
  } else {
    out.new_position = attempted;
    out.reward = kStepCost;
    if (auto t = config.target_at(attempted)) {
      out.reward += config.targets[*t].value;
      next.consumed_target = *t;
      out.terminal = true;
    }
  }
  next.position = out.new_position;
  next.accumulated_score += out.reward;
  if (next.step_index >= kMaxSteps) out.terminal = true;
  next.terminated = out.terminal;
  return {next, out};
}

std::vector<int> distances_from(const GridConfig& config, Coord from) {
  std::vector<int> dist(static_cast<std::size_t>(config.width * config.height), kUnreachable);
  if (!config.is_free(from)) return dist;
  auto idx = [&](Coord c) { return static_cast<std::size_t>(c.y * config.width + c.x); };
  std::deque<Coord> frontier{from};
  dist[idx(from)] = 0;
  while (!frontier.empty()) {
    Coord c = frontier.front();
    frontier.pop_front();
    for (Direction d : kAllDirections) {
      Coord n = offset(c, d);
      if (!config.is_free(n) || dist[idx(n)] != kUnreachable) continue;
      dist[idx(n)] = dist[idx(c)] + 1;
      frontier.push_back(n);
    }
  }
  return dist;
}

int shortest_path_len(const GridConfig& config, Coord from, Coord to) {
  if (!config.is_free(from) || !config.is_free(to)) {
    throw ContractViolation("shortest_path_len endpoints must be free cells");
  }
  return distances_from(config, from)[static_cast<std::size_t>(to.y * config.width + to.x)];
}

int accessible_cells(const GridConfig& config) {
  auto dist = distances_from(config, config.spawn);
  return static_cast<int>(std::count_if(dist.begin(), dist.end(), [](int d) { return d != kUnreachable; }));
}

std::size_t closest_distractor(const GridConfig& config) {
  auto dist = distances_from(config, config.spawn);
  std::size_t preferred = config.preferred_target();
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    if (i == preferred) continue;
    Coord p = config.targets[i].pos;
    int d = dist[static_cast<std::size_t>(p.y * config.width + p.x)];
    if (!best) {
      best = i;
      continue;
    }
    Coord bp = config.targets[*best].pos;
    if (d < dist[static_cast<std::size_t>(bp.y * config.width + bp.x)]) best = i;
  }
  if (!best) throw ContractViolation("config has no distractor targets");
  return *best;
}

void to_json(nlohmann::json& j, const GridConfig& c) {
  nlohmann::json obstacles = nlohmann::json::array();
  for (const Coord& o : c.obstacles) obstacles.push_back({o.x, o.y});
  nlohmann::json targets = nlohmann::json::array();
  for (const Target& t : c.targets) targets.push_back({{"x", t.pos.x}, {"y", t.pos.y}, {"value", t.value}});
  j = nlohmann::json{{"id", c.id},
                     {"width", c.width},
                     {"height", c.height},
                     {"obstacles", obstacles},
                     {"targets", targets},
                     {"spawn", {c.spawn.x, c.spawn.y}},
                     {"complexity", std::string(to_string(c.complexity))}};
}

void from_json(const nlohmann::json& j, GridConfig& c) {
  c.id = j.at("id").get<std::string>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.obstacles.clear();
  for (const auto& o : j.at("obstacles")) c.obstacles.insert({o.at(0).get<int>(), o.at(1).get<int>()});
  c.targets.clear();
  for (const auto& t : j.at("targets")) {
    c.targets.push_back({{t.at("x").get<int>(), t.at("y").get<int>()}, t.at("value").get<double>()});
  }
  const auto& s = j.at("spawn");
  c.spawn = {s.at(0).get<int>(), s.at(1).get<int>()};
  c.complexity = parse_complexity(j.at("complexity").get<std::string>());
}

std::string to_json_string(const GridConfig& c) { return nlohmann::json(c).dump(2) + "\n"; }

GridConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  return nlohmann::json::parse(in).get<GridConfig>();
}

void save_config(const GridConfig& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << to_json_string(c);
}

std::vector<GridConfig> load_config_dir(const std::string& dir) {
  std::vector<GridConfig> configs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    if (entry.path().filename() == "manifest.json") continue;
    configs.push_back(load_config(entry.path().string()));
  }
  std::sort(configs.begin(), configs.end(), [](const GridConfig& a, const GridConfig& b) { return a.id < b.id; });
  return configs;
}

}  // namespace creditgrid
