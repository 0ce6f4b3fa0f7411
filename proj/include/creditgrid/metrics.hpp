#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "creditgrid/grid.hpp"
#include "creditgrid/record.hpp"

namespace creditgrid {

struct EpisodeMetrics {
  bool pmax = false;
  bool poptimal = false;
  std::optional<int> consumed_rank;  // 1 = preferred
  double redundancy = 0.0;
  double immediate_redundancy = 0.0;
  double coverage = 0.0;
  bool linear_move = false;
  bool closest_distractor = false;
};

bool pmax(const EpisodeRecord& record, const GridConfig& config);
bool poptimal(const EpisodeRecord& record, const GridConfig& config);
double redundancy(const EpisodeRecord& record);
double immediate_redundancy(const EpisodeRecord& record);
double coverage(const EpisodeRecord& record, const GridConfig& config);
bool linear_move(const EpisodeRecord& record);
bool reached_closest_distractor(const EpisodeRecord& record, const GridConfig& config);

EpisodeMetrics compute_metrics(const EpisodeRecord& record, const GridConfig& config);

/// Cells occupied over the episode in visit order, starting with spawn.
/// Collision steps add nothing.
std::vector<Coord> occupied_sequence(const EpisodeRecord& record);

/// Metric names accepted by metric_value / learning_curves.
const std::vector<std::string>& metric_names();
double metric_value(const EpisodeMetrics& m, const std::string& name);

struct MetricRow {
  std::string group;  // e.g. "ibl-td/simple"
  std::string config_id;
  int run = 0;
  int episode = 1;
  EpisodeMetrics metrics;
};

struct Curve {
  std::string group;
  std::string metric;
  std::vector<double> by_episode;  // index 0 = episode 1
  double overall = 0.0;
};

/// Per-episode means: first across runs within a config, then across configs.
/// `overall` is the mean of the per-episode values.
std::vector<Curve> learning_curves(std::span<const MetricRow> rows, std::span<const std::string> metrics);

/// Mean of curve entries for 1-based episodes [first, last].
double window_mean(const Curve& curve, int first, int last);

}  // namespace creditgrid
