#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "creditgrid/grid.hpp"

namespace creditgrid {

/// One environment step; `position` is the cell occupied after the move.
struct StepRecord {
  Coord position;
  Direction action = Direction::Up;
  double reward = 0.0;
  bool collided = false;

  bool operator==(const StepRecord&) const = default;
};

/// Log format shared by simulated agents and human players.
struct EpisodeRecord {
  std::string config_id;
  int run = 0;
  int episode = 1;  // 1-based
  Coord spawn;
  std::vector<StepRecord> steps;
  std::optional<std::size_t> consumed_target;
  double score = 0.0;

  bool operator==(const EpisodeRecord&) const = default;
};

/// Empty iff the record is consistent with the config under the game rules.
std::vector<std::string> check_record(const EpisodeRecord& record, const GridConfig& config);

inline constexpr const char* kStepsCsvHeader = "config_id,run,episode,step,x,y,action,reward,collided";
inline constexpr const char* kEpisodesCsvHeader =
    "config_id,run,episode,consumed_rank,steps,score,pmax_flag,poptimal_flag";

/// Shortest round-trip decimal form.
std::string format_double(double v);

void write_steps_header(std::ostream& out);
void write_steps_rows(std::ostream& out, const EpisodeRecord& record);

void write_episodes_header(std::ostream& out);
void write_episode_row(std::ostream& out, const EpisodeRecord& record, const GridConfig& config);

/// Parses a steps CSV. Spawn, consumed target, and score are left unset until
/// attach_config() is called.
std::vector<EpisodeRecord> read_steps_csv(std::istream& in);
std::vector<EpisodeRecord> read_steps_csv_file(const std::string& path);

/// Fills spawn, consumed target, and score from the config; throws
/// std::invalid_argument if the record does not fit the config.
void attach_config(EpisodeRecord& record, const GridConfig& config);

/// Splits one CSV line on commas (no quoting; ids never contain commas).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace creditgrid
