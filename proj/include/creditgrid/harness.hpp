#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "creditgrid/agents.hpp"
#include "creditgrid/grid.hpp"
#include "creditgrid/record.hpp"

namespace creditgrid {

/// Runs act -> step -> observe until the episode terminates, then end_episode().
EpisodeRecord run_episode(const GridConfig& config, Agent& agent, int run = 0, int episode = 1);

struct RunSpec {
  std::vector<std::string> config_ids;
  AgentParams agent;
  int episodes = 40;
  int runs_per_config = 3;
  std::uint64_t base_seed = 0;
  /// When set, each config uses the published defaults for its own condition
  /// instead of `agent` (only agent.kind is read).
  bool per_condition_defaults = false;
};

std::uint64_t agent_seed(std::uint64_t base_seed, const std::string& config_id, int run);

/// All episodes of one fresh agent on one config.
std::vector<EpisodeRecord> run_agent(const GridConfig& config, const AgentParams& params, std::uint64_t seed, int run,
                                     int episodes);

struct RunFailure {
  std::string config_id;
  int run = 0;
  std::string reason;
};

struct BatchResult {
  std::vector<EpisodeRecord> records;  // ordered by (config position in spec, run, episode)
  std::vector<RunFailure> failures;
};

struct BatchOptions {
  unsigned workers = 1;
  /// Invoked from a single thread, in spec order, once per finished agent-run.
  std::function<void(const GridConfig&, const std::vector<EpisodeRecord>&)> on_run;
  bool keep_records = true;
};

BatchResult run_batch(const RunSpec& spec, const std::map<std::string, GridConfig>& configs,
                      const BatchOptions& options = {});

std::map<std::string, GridConfig> index_configs(const std::vector<GridConfig>& configs);

/// Writes steps.csv and episodes.csv under `out_dir` as runs complete.
BatchResult run_batch_to_dir(const RunSpec& spec, const std::map<std::string, GridConfig>& configs,
                             const std::string& out_dir, unsigned workers);

}  // namespace creditgrid
