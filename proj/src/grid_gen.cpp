#include "creditgrid/grid_gen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "creditgrid/rng.hpp"

namespace creditgrid {

namespace {

constexpr double kValueTieTolerance = 1e-9;

std::size_t cell_index(const GridConfig& c, Coord p) { return static_cast<std::size_t>(p.y * c.width + p.x); }

std::vector<double> sample_dirichlet(Rng& rng, double alpha, std::size_t k) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  for (;;) {
    std::vector<double> v(k);
    double sum = 0.0;
    for (double& x : v) {
      x = gamma(rng);
      sum += x;
    }
    if (!(sum > 0.0)) continue;
    bool ok = true;
    for (double& x : v) {
      x /= sum;
      if (!(x > 0.0 && x < 1.0)) ok = false;
    }
    if (ok) return v;
  }
}

// Cells strictly between a and b on the routes considered "direct".
std::vector<Coord> leg(Coord from, Coord to) {
  std::vector<Coord> cells;
  Coord c = from;
  while (c != to) {
    if (c.x != to.x) c.x += (to.x > c.x) ? 1 : -1;
    else c.y += (to.y > c.y) ? 1 : -1;
    cells.push_back(c);
  }
  return cells;
}

bool route_has_obstacle(const GridConfig& config, const std::vector<Coord>& cells) {
  return std::any_of(cells.begin(), cells.end(), [&](Coord c) { return !config.is_free(c); });
}

bool net_reward_ordered(const GridConfig& config, const std::vector<int>& dist) {
  std::size_t pref = config.preferred_target();
  auto net = [&](std::size_t i) {
    return config.targets[i].value + kStepCost * dist[cell_index(config, config.targets[i].pos)];
  };
  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    if (i != pref && !(net(pref) > net(i))) return false;
  }
  return true;
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[uniform_index(rng, v.size())];
}

}  // namespace

int complexity_delta(Complexity c) { return c == Complexity::Simple ? 1 : 4; }

DistanceRange default_preferred_distance(Complexity c) {
  return c == Complexity::Simple ? DistanceRange{2, 4} : DistanceRange{5, 6};
}

int measured_delta(const GridConfig& config) {
  auto dist = distances_from(config, config.spawn);
  auto d_pref = dist[cell_index(config, config.targets[config.preferred_target()].pos)];
  auto d_near = dist[cell_index(config, config.targets[closest_distractor(config)].pos)];
  return d_pref - d_near;
}

bool straight_line_clear(const GridConfig& config, Coord from, Coord to) {
  if (from.x != to.x && from.y != to.y) return false;
  auto cells = leg(from, to);
  if (!cells.empty()) cells.pop_back();
  for (Coord c : cells) {
    if (!config.is_free(c) || config.target_at(c)) return false;
  }
  return true;
}

std::vector<Coord> rasterize_segment(Coord a, Coord b) {
  // Bresenham walk; integer-only so it is platform independent.
  std::vector<Coord> cells;
  int dx = std::abs(b.x - a.x), sx = a.x < b.x ? 1 : -1;
  int dy = -std::abs(b.y - a.y), sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;
  Coord c = a;
  for (;;) {
    cells.push_back(c);
    if (c == b) break;
    int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      c.x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      c.y += sy;
    }
  }
  return cells;
}

bool direct_routes_blocked(const GridConfig& config, Coord from, Coord to) {
  if (from == to) return false;
  if (from.x == to.x || from.y == to.y) return route_has_obstacle(config, leg(from, to));
  // Horizontal-first and vertical-first L routes.
  Coord corner_h{to.x, from.y};
  Coord corner_v{from.x, to.y};
  auto route_h = leg(from, corner_h);
  auto rest_h = leg(corner_h, to);
  route_h.insert(route_h.end(), rest_h.begin(), rest_h.end());
  auto route_v = leg(from, corner_v);
  auto rest_v = leg(corner_v, to);
  route_v.insert(route_v.end(), rest_v.begin(), rest_v.end());
  return route_has_obstacle(config, route_h) && route_has_obstacle(config, route_v);
}

GridConfig generate(const GenSpec& spec) {
  if (spec.width < 2 || spec.height < 2) throw std::invalid_argument("grid must be at least 2x2");
  if (spec.n_obstacles < 0 || spec.n_obstacles > 3) throw std::invalid_argument("n_obstacles must be in [0,3]");
  if (!(spec.dirichlet_alpha > 0.0)) throw std::invalid_argument("dirichlet_alpha must be positive");

  Rng rng(spec.seed);
  const int delta = complexity_delta(spec.complexity);
  DistanceRange range = default_preferred_distance(spec.complexity);
  if (spec.min_preferred_distance > 0) range.min = spec.min_preferred_distance;
  if (spec.max_preferred_distance > 0) range.max = spec.max_preferred_distance;
  range.min = std::max(range.min, delta + 1);

  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    GridConfig config;
    config.width = spec.width;
    config.height = spec.height;
    config.complexity = spec.complexity;
    if (!spec.id.empty()) {
      config.id = spec.id;
    } else {
      std::ostringstream id;
      id << to_string(spec.complexity) << "-" << spec.seed;
      config.id = id.str();
    }

    auto random_cell = [&] {
      return Coord{std::uniform_int_distribution<int>(0, spec.width - 1)(rng),
                   std::uniform_int_distribution<int>(0, spec.height - 1)(rng)};
    };
    int segments = spec.n_obstacles > 0 ? spec.n_obstacles : std::uniform_int_distribution<int>(1, 3)(rng);
    for (int s = 0; s < segments; ++s) {
      Coord a = random_cell();
      Coord b = random_cell();
      for (Coord c : rasterize_segment(a, b)) config.obstacles.insert(c);
    }

    std::vector<Coord> free_cells;
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x)
        if (!config.is_obstacle({x, y})) free_cells.push_back({x, y});
    if (free_cells.size() < 5) continue;
    config.spawn = pick(rng, free_cells);

    auto dist = distances_from(config, config.spawn);
    auto d = [&](Coord c) { return dist[cell_index(config, c)]; };

    std::vector<Coord> preferred_candidates;
    for (Coord c : free_cells) {
      int dc = d(c);
      if (c == config.spawn || dc == kUnreachable || dc < range.min || dc > range.max) continue;
      bool shape_ok = spec.complexity == Complexity::Simple ? straight_line_clear(config, config.spawn, c)
                                                            : direct_routes_blocked(config, config.spawn, c);
      if (shape_ok) preferred_candidates.push_back(c);
    }
    if (preferred_candidates.empty()) continue;
    Coord preferred = pick(rng, preferred_candidates);
    int d_near = d(preferred) - delta;

    auto on_direct_line = [&](Coord c) {
      if (spec.complexity != Complexity::Simple) return false;
      for (Coord l : leg(config.spawn, preferred))
        if (l == c) return true;
      return false;
    };
    std::vector<Coord> near_candidates;
    std::vector<Coord> far_candidates;
    for (Coord c : free_cells) {
      if (c == config.spawn || c == preferred || d(c) == kUnreachable || on_direct_line(c)) continue;
      if (d(c) == d_near) near_candidates.push_back(c);
      else if (d(c) > d_near) far_candidates.push_back(c);
    }
    if (near_candidates.empty() || far_candidates.size() < 2) continue;
    Coord nearest = pick(rng, near_candidates);
    Coord other1 = pick(rng, far_candidates);
    Coord other2 = other1;
    while (other2 == other1) other2 = pick(rng, far_candidates);

    // Slot order is shuffled so the preferred target's index carries no information.
    std::vector<Coord> positions{preferred, nearest, other1, other2};
    std::vector<std::size_t> slots{0, 1, 2, 3};
    std::shuffle(slots.begin(), slots.end(), rng);

    bool placed = false;
    for (int draw = 0; draw < 200 && !placed; ++draw) {
      auto values = sample_dirichlet(rng, spec.dirichlet_alpha, 4);
      std::sort(values.begin(), values.end(), std::greater<>());
      bool distinct = true;
      for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i - 1] - values[i] < kValueTieTolerance) distinct = false;
      if (!distinct) continue;
      std::vector<double> rest(values.begin() + 1, values.end());
      std::shuffle(rest.begin(), rest.end(), rng);

      config.targets.assign(4, {});
      config.targets[slots[0]] = {positions[0], values[0]};
      for (std::size_t i = 1; i < 4; ++i) config.targets[slots[i]] = {positions[i], rest[i - 1]};
      placed = net_reward_ordered(config, dist);
    }
    if (!placed) continue;
    if (measured_delta(config) != delta) continue;
    return config;
  }
  throw GenerationError("no valid gridworld found for seed " + std::to_string(spec.seed) + " within " +
                        std::to_string(spec.max_attempts) + " attempts");
}

std::vector<std::string> validate(const GridConfig& config) {
  std::vector<std::string> issues;
  if (config.width < 1 || config.height < 1) {
    issues.emplace_back("grid dimensions must be positive");
    return issues;
  }
  if (!config.in_bounds(config.spawn)) issues.emplace_back("spawn out of bounds");
  else if (config.is_obstacle(config.spawn)) issues.emplace_back("spawn on obstacle");
  for (Coord o : config.obstacles)
    if (!config.in_bounds(o)) {
      issues.emplace_back("obstacle out of bounds");
      break;
    }
  if (config.targets.size() != 4) {
    issues.emplace_back("expected exactly 4 targets");
    if (config.targets.empty()) return issues;
  }

  bool geometry_ok = true;
  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    const Target& t = config.targets[i];
    if (!config.in_bounds(t.pos)) {
      issues.emplace_back("target out of bounds");
      geometry_ok = false;
    } else if (config.is_obstacle(t.pos)) {
      issues.emplace_back("target on obstacle");
      geometry_ok = false;
    }
    if (t.pos == config.spawn) {
      issues.emplace_back("target on spawn");
      geometry_ok = false;
    }
    if (!(t.value > 0.0 && t.value < 1.0)) issues.emplace_back("target value outside (0,1)");
    for (std::size_t j = i + 1; j < config.targets.size(); ++j) {
      if (config.targets[j].pos == t.pos) {
        issues.emplace_back("targets overlap");
        geometry_ok = false;
      }
      if (std::abs(config.targets[j].value - t.value) < kValueTieTolerance) issues.emplace_back("target values not distinct");
    }
  }
  if (!geometry_ok || !config.is_free(config.spawn)) return issues;

  auto dist = distances_from(config, config.spawn);
  bool reachable = true;
  for (const Target& t : config.targets) {
    if (dist[cell_index(config, t.pos)] == kUnreachable) reachable = false;
  }
  if (!reachable) {
    issues.emplace_back("target unreachable from spawn");
    return issues;
  }
  if (!net_reward_ordered(config, dist)) issues.emplace_back("net-reward ordering violated");
  return issues;
}

GenSpec reference_spec(Complexity c, int index) {
  GenSpec spec;
  spec.complexity = c;
  spec.seed = derive_seed(kReferenceSeed, to_string(c), static_cast<std::uint64_t>(index));
  std::ostringstream id;
  id << to_string(c) << "-" << (index < 10 ? "0" : "") << index;
  spec.id = id.str();
  return spec;
}

std::vector<GridConfig> reference_set() {
  std::vector<GridConfig> configs;
  for (int i = 0; i < kReferenceSimpleCount; ++i) configs.push_back(generate(reference_spec(Complexity::Simple, i)));
  for (int i = 0; i < kReferenceComplexCount; ++i) configs.push_back(generate(reference_spec(Complexity::Complex, i)));
  return configs;
}

}  // namespace creditgrid
