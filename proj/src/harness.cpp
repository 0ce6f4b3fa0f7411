#include "creditgrid/harness.hpp"

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include "creditgrid/rng.hpp"

namespace creditgrid {

EpisodeRecord run_episode(const GridConfig& config, Agent& agent, int run, int episode) {
  EpisodeRecord record;
  record.config_id = config.id;
  record.run = run;
  record.episode = episode;
  record.spawn = config.spawn;

  EnvState state = initial_state(config);
  while (!state.terminated) {
    Direction action = agent.act(state.position);
    auto [next, out] = step(config, state, action);
    Transition tr{state.position, action, out.reward, out.new_position, out.collided, next.consumed_target.has_value()};
    agent.observe(tr);
    record.steps.push_back({out.new_position, action, out.reward, out.collided});
    state = next;
  }
  record.consumed_target = state.consumed_target;
  record.score = state.accumulated_score;
  std::optional<double> target_value;
  if (state.consumed_target) target_value = config.targets[*state.consumed_target].value;
  agent.end_episode(target_value);
  return record;
}

std::uint64_t agent_seed(std::uint64_t base_seed, const std::string& config_id, int run) {
  return derive_seed(base_seed, config_id, static_cast<std::uint64_t>(run));
}

std::vector<EpisodeRecord> run_agent(const GridConfig& config, const AgentParams& params, std::uint64_t seed, int run,
                                     int episodes) {
  auto agent = make_agent(params, config, seed);
  std::vector<EpisodeRecord> records;
  records.reserve(static_cast<std::size_t>(episodes));
  for (int e = 1; e <= episodes; ++e) records.push_back(run_episode(config, *agent, run, e));
  return records;
}

std::map<std::string, GridConfig> index_configs(const std::vector<GridConfig>& configs) {
  std::map<std::string, GridConfig> out;
  for (const GridConfig& c : configs) out.emplace(c.id, c);
  return out;
}

BatchResult run_batch(const RunSpec& spec, const std::map<std::string, GridConfig>& configs,
                      const BatchOptions& options) {
  if (spec.episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (spec.runs_per_config < 1) throw std::invalid_argument("runs_per_config must be >= 1");

  struct Job {
    const GridConfig* config = nullptr;
    std::string config_id;
    int run = 0;
  };
  struct Outcome {
    std::vector<EpisodeRecord> records;
    std::optional<std::string> error;
  };

  BatchResult result;
  std::vector<Job> jobs;
  for (const std::string& id : spec.config_ids) {
    auto it = configs.find(id);
    if (it == configs.end()) {
      std::cerr << "warning: config " << id << " not found; skipping\n";
      for (int r = 0; r < spec.runs_per_config; ++r) result.failures.push_back({id, r, "config not found"});
      continue;
    }
    for (int r = 0; r < spec.runs_per_config; ++r) jobs.push_back({&it->second, id, r});
  }

  std::vector<std::optional<Outcome>> slots(jobs.size());
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      Outcome out;
      try {
        AgentParams params = spec.per_condition_defaults ? default_params(spec.agent.kind, job.config->complexity)
                                                         : spec.agent;
        out.records = run_agent(*job.config, params, agent_seed(spec.base_seed, job.config_id, job.run), job.run,
                                spec.episodes);
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      {
        std::lock_guard lock(mu);
        slots[i] = std::move(out);
      }
      ready.notify_all();
    }
  };

  unsigned n_workers = std::max(1u, options.workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    Outcome out;
    {
      std::unique_lock lock(mu);
      ready.wait(lock, [&] { return slots[i].has_value(); });
      out = std::move(*slots[i]);
      slots[i].reset();
    }
    if (out.error) {
      std::cerr << "warning: run " << jobs[i].config_id << "/" << jobs[i].run << " failed: " << *out.error << "\n";
      result.failures.push_back({jobs[i].config_id, jobs[i].run, *out.error});
      continue;
    }
    if (options.on_run) options.on_run(*jobs[i].config, out.records);
    if (options.keep_records) {
      for (auto& r : out.records) result.records.push_back(std::move(r));
    }
  }
  for (auto& t : pool) t.join();
  return result;
}

BatchResult run_batch_to_dir(const RunSpec& spec, const std::map<std::string, GridConfig>& configs,
                             const std::string& out_dir, unsigned workers) {
  std::filesystem::create_directories(out_dir);
  std::ofstream steps(std::filesystem::path(out_dir) / "steps.csv", std::ios::binary);
  std::ofstream episodes(std::filesystem::path(out_dir) / "episodes.csv", std::ios::binary);
  if (!steps || !episodes) throw std::runtime_error("cannot create output files in " + out_dir);
  write_steps_header(steps);
  write_episodes_header(episodes);

  BatchOptions options;
  options.workers = workers;
  options.keep_records = false;
  options.on_run = [&](const GridConfig& config, const std::vector<EpisodeRecord>& records) {
    for (const EpisodeRecord& r : records) {
      write_steps_rows(steps, r);
      write_episode_row(episodes, r, config);
    }
    steps.flush();
    episodes.flush();
  };
  return run_batch(spec, configs, options);
}

}  // namespace creditgrid
