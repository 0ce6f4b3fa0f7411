#include "creditgrid/metrics.hpp"

#include <map>
#include <set>
#include <stdexcept>

namespace creditgrid {

namespace {

void require_match(const EpisodeRecord& record, const GridConfig& config) {
  if (record.config_id != config.id) {
    throw std::invalid_argument("record for " + record.config_id + " evaluated against config " + config.id);
  }
}

}  // namespace

bool pmax(const EpisodeRecord& record, const GridConfig& config) {
  require_match(record, config);
  return record.consumed_target && *record.consumed_target == config.preferred_target();
}

bool poptimal(const EpisodeRecord& record, const GridConfig& config) {
  if (!pmax(record, config)) return false;
  int best = shortest_path_len(config, config.spawn, config.targets[config.preferred_target()].pos);
  return static_cast<int>(record.steps.size()) == best;
}

std::vector<Coord> occupied_sequence(const EpisodeRecord& record) {
  std::vector<Coord> cells{record.spawn};
  for (const StepRecord& s : record.steps) {
    if (!s.collided) cells.push_back(s.position);
  }
  return cells;
}

double redundancy(const EpisodeRecord& record) {
  auto cells = occupied_sequence(record);
  std::set<Coord> unique(cells.begin(), cells.end());
  return static_cast<double>(cells.size() - unique.size()) / static_cast<double>(unique.size());
}

double immediate_redundancy(const EpisodeRecord& record) {
  if (record.steps.size() < 2) return 0.0;
  std::vector<Coord> pos{record.spawn};
  for (const StepRecord& s : record.steps) pos.push_back(s.position);
  std::size_t hits = 0;
  for (std::size_t l = 2; l < pos.size(); ++l) {
    if (!record.steps[l - 1].collided && pos[l] == pos[l - 2]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(record.steps.size() - 1);
}

double coverage(const EpisodeRecord& record, const GridConfig& config) {
  require_match(record, config);
  auto cells = occupied_sequence(record);
  std::set<Coord> unique(cells.begin(), cells.end());
  return static_cast<double>(unique.size()) / static_cast<double>(accessible_cells(config));
}

bool linear_move(const EpisodeRecord& record) {
  if (record.steps.size() < 4) return false;
  for (std::size_t i = 1; i < 4; ++i) {
    if (record.steps[i].action != record.steps[0].action) return false;
  }
  return true;
}

bool reached_closest_distractor(const EpisodeRecord& record, const GridConfig& config) {
  require_match(record, config);
  return record.consumed_target && *record.consumed_target == closest_distractor(config);
}

EpisodeMetrics compute_metrics(const EpisodeRecord& record, const GridConfig& config) {
  EpisodeMetrics m;
  m.pmax = pmax(record, config);
  m.poptimal = poptimal(record, config);
  if (record.consumed_target) m.consumed_rank = config.rank_of(*record.consumed_target);
  m.redundancy = redundancy(record);
  m.immediate_redundancy = immediate_redundancy(record);
  m.coverage = coverage(record, config);
  m.linear_move = linear_move(record);
  m.closest_distractor = reached_closest_distractor(record, config);
  return m;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{
      "pmax",     "poptimal", "redundancy", "immediate_redundancy", "coverage", "linear_move", "closest_distractor",
      "target_1", "target_2", "target_3",   "target_4",             "no_target"};
  return names;
}

double metric_value(const EpisodeMetrics& m, const std::string& name) {
  auto flag = [](bool b) { return b ? 1.0 : 0.0; };
  if (name == "pmax") return flag(m.pmax);
  if (name == "poptimal") return flag(m.poptimal);
  if (name == "redundancy") return m.redundancy;
  if (name == "immediate_redundancy") return m.immediate_redundancy;
  if (name == "coverage") return m.coverage;
  if (name == "linear_move") return flag(m.linear_move);
  if (name == "closest_distractor") return flag(m.closest_distractor);
  if (name == "no_target") return flag(!m.consumed_rank);
  if (name.size() == 8 && name.rfind("target_", 0) == 0) {
    int rank = name[7] - '0';
    return flag(m.consumed_rank && *m.consumed_rank == rank);
  }
  throw std::invalid_argument("unknown metric: " + name);
}

std::vector<Curve> learning_curves(std::span<const MetricRow> rows, std::span<const std::string> metrics) {
  if (rows.empty()) throw std::invalid_argument("learning_curves needs at least one record");
  // group -> episode -> config -> (sum, count)
  using PerConfig = std::map<std::string, std::pair<double, int>>;
  std::vector<Curve> curves;
  std::set<std::string> groups;
  int max_episode = 0;
  for (const MetricRow& r : rows) {
    groups.insert(r.group);
    max_episode = std::max(max_episode, r.episode);
  }
  for (const std::string& group : groups) {
    for (const std::string& metric : metrics) {
      std::vector<PerConfig> acc(static_cast<std::size_t>(max_episode));
      for (const MetricRow& r : rows) {
        if (r.group != group || r.episode < 1) continue;
        auto& cell = acc[static_cast<std::size_t>(r.episode - 1)][r.config_id];
        cell.first += metric_value(r.metrics, metric);
        cell.second += 1;
      }
      Curve c{group, metric, {}, 0.0};
      int filled = 0;
      for (const PerConfig& per : acc) {
        if (per.empty()) {
          // Episodes with no records for this group end the curve.
          break;
        }
        double sum = 0.0;
        for (const auto& [cfg, sc] : per) sum += sc.first / sc.second;
        c.by_episode.push_back(sum / static_cast<double>(per.size()));
        c.overall += c.by_episode.back();
        ++filled;
      }
      if (filled > 0) c.overall /= filled;
      curves.push_back(std::move(c));
    }
  }
  return curves;
}

double window_mean(const Curve& curve, int first, int last) {
  if (first < 1 || last < first || last > static_cast<int>(curve.by_episode.size())) {
    throw std::out_of_range("episode window outside curve");
  }
  double sum = 0.0;
  for (int e = first; e <= last; ++e) sum += curve.by_episode[static_cast<std::size_t>(e - 1)];
  return sum / (last - first + 1);
}

}  // namespace creditgrid
