#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "creditgrid/grid.hpp"

namespace creditgrid {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenSpec {
  std::uint64_t seed = 0;
  Complexity complexity = Complexity::Simple;
  int n_obstacles = 0;  // segment count in [1,3]; 0 draws it uniformly
  double dirichlet_alpha = 1.0;
  int width = 11;
  int height = 11;
  std::string id;  // empty derives "<complexity>-<seed>"
  /// Shortest-path distance range for the preferred target; 0 picks the
  /// per-complexity default.
  int min_preferred_distance = 0;
  int max_preferred_distance = 0;
  int max_attempts = 2000;
};

/// Required distance gap between the preferred target and the closest distractor.
int complexity_delta(Complexity c);

struct DistanceRange {
  int min = 0;
  int max = 0;
};
DistanceRange default_preferred_distance(Complexity c);

/// Shortest-path distance to the preferred target minus distance to the closest distractor.
int measured_delta(const GridConfig& config);

/// True when the preferred target shares a row or column with `from` and nothing
/// (obstacle or other target) sits between them.
bool straight_line_clear(const GridConfig& config, Coord from, Coord to);

/// True when every axis-aligned monotone route from `from` to `to` with at most one
/// turn contains an obstacle cell.
bool direct_routes_blocked(const GridConfig& config, Coord from, Coord to);

/// Cells of the line segment between two endpoints, inclusive, in walk order.
std::vector<Coord> rasterize_segment(Coord a, Coord b);

/// Throws GenerationError when no valid config is found within spec.max_attempts.
GridConfig generate(const GenSpec& spec);

/// Empty iff every GridConfig invariant holds.
std::vector<std::string> validate(const GridConfig& config);

inline constexpr std::uint64_t kReferenceSeed = 20220401;
inline constexpr int kReferenceSimpleCount = 64;
inline constexpr int kReferenceComplexCount = 62;

GenSpec reference_spec(Complexity c, int index);
/// The repo's fixed reference set: 64 Simple then 62 Complex configs.
std::vector<GridConfig> reference_set();

}  // namespace creditgrid
