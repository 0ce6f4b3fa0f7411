#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "creditgrid/grid_gen.hpp"
#include "creditgrid/harness.hpp"

using namespace creditgrid;
namespace fs = std::filesystem;

namespace {

class WallAgent : public Agent {
 public:
  Direction act(Coord) override { return Direction::Left; }
  void observe(const Transition&) override {}
  void end_episode(std::optional<double>) override {}
  const AgentParams& params() const override { return params_; }

 private:
  AgentParams params_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<GridConfig> subset(Complexity c, int n) {
  std::vector<GridConfig> out;
  for (int i = 0; i < n; ++i) out.push_back(generate(reference_spec(c, static_cast<std::uint64_t>(i))));
  return out;
}

RunSpec spec_for(const std::vector<GridConfig>& configs, AgentKind kind, std::uint64_t seed) {
  RunSpec s;
  for (const auto& c : configs) s.config_ids.push_back(c.id);
  s.agent = default_params(kind, Complexity::Simple);
  s.base_seed = seed;
  s.per_condition_defaults = true;
  return s;
}

}  // namespace

TEST_CASE("an agent stuck against a wall times out") {
  GridConfig c;
  c.id = "wall";
  c.spawn = {0, 5};
  c.targets = {{{10, 0}, 0.4}, {{10, 10}, 0.3}, {{5, 0}, 0.2}, {{5, 10}, 0.1}};
  WallAgent agent;
  auto rec = run_episode(c, agent, 0, 1);
  CHECK(rec.steps.size() == 31);
  CHECK(rec.score == doctest::Approx(-1.86).epsilon(1e-12));
  CHECK_FALSE(rec.consumed_target);
  CHECK(check_record(rec, c).empty());
}

TEST_CASE("a converged agent next to the preferred target takes one step") {
  GridConfig c;
  c.id = "adjacent";
  c.spawn = {5, 5};
  c.targets = {{{5, 4}, 0.4}, {{10, 10}, 0.3}, {{0, 0}, 0.2}, {{0, 10}, 0.1}};
  AgentParams p = default_params(AgentKind::QLearning, Complexity::Simple);
  p.epsilon = 0.0;
  QLearningAgent agent(p, 1);
  agent.table().set({{5, 5}, Direction::Up}, 0.9);
  auto rec = run_episode(c, agent, 0, 1);
  CHECK(rec.steps.size() == 1);
  CHECK(rec.consumed_target == std::optional<std::size_t>(0));
}

TEST_CASE("reference batches have the published size") {
  auto configs = reference_set();
  auto index = index_configs(configs);
  for (Complexity cx : {Complexity::Simple, Complexity::Complex}) {
    RunSpec s;
    for (const auto& c : configs)
      if (c.complexity == cx) s.config_ids.push_back(c.id);
    s.agent = default_params(AgentKind::IblTd, cx);
    auto result = run_batch(s, index, BatchOptions{1, {}, true});
    CHECK(result.failures.empty());
    std::size_t agents = s.config_ids.size() * 3;
    CHECK(agents == (cx == Complexity::Simple ? 192u : 186u));
    CHECK(result.records.size() == agents * 40);
    for (const auto& r : result.records) CHECK(check_record(r, index.at(r.config_id)).empty());
  }
}

TEST_CASE("batch output is byte-identical across worker counts and repeats") {
  auto configs = subset(Complexity::Complex, 4);
  auto index = index_configs(configs);
  for (AgentKind kind : kAllAgentKinds) {
    auto spec = spec_for(configs, kind, 42);
    auto base = fs::temp_directory_path() / "creditgrid_test_harness";
    fs::remove_all(base);
    run_batch_to_dir(spec, index, (base / "a").string(), 1);
    run_batch_to_dir(spec, index, (base / "b").string(), 4);
    run_batch_to_dir(spec, index, (base / "c").string(), 1);
    for (const char* f : {"steps.csv", "episodes.csv"}) {
      std::string a = slurp(base / "a" / f);
      CHECK(!a.empty());
      CHECK(a == slurp(base / "b" / f));
      CHECK(a == slurp(base / "c" / f));
    }
    fs::remove_all(base);
  }
}

TEST_CASE("a run inside a batch matches the same run standalone") {
  auto configs = subset(Complexity::Simple, 3);
  auto index = index_configs(configs);
  auto spec = spec_for(configs, AgentKind::IblExponential, 9);
  auto batch = run_batch(spec, index, BatchOptions{2, {}, true});
  const GridConfig& c = configs[1];
  auto alone = run_agent(c, default_params(AgentKind::IblExponential, c.complexity), agent_seed(9, c.id, 2), 2, 40);
  std::vector<EpisodeRecord> from_batch;
  for (const auto& r : batch.records)
    if (r.config_id == c.id && r.run == 2) from_batch.push_back(r);
  CHECK(from_batch == alone);

  std::reverse(spec.config_ids.begin(), spec.config_ids.end());
  auto reversed = run_batch(spec, index, BatchOptions{1, {}, true});
  std::vector<EpisodeRecord> from_reversed;
  for (const auto& r : reversed.records)
    if (r.config_id == c.id && r.run == 2) from_reversed.push_back(r);
  CHECK(from_reversed == alone);
}

TEST_CASE("missing configs are reported without stopping the batch") {
  auto configs = subset(Complexity::Simple, 2);
  auto index = index_configs(configs);
  auto spec = spec_for(configs, AgentKind::QLearning, 1);
  spec.config_ids.insert(spec.config_ids.begin() + 1, "nope");
  spec.episodes = 5;
  auto result = run_batch(spec, index);
  CHECK(result.failures.size() == 3);
  CHECK(result.failures[0].config_id == "nope");
  CHECK(result.records.size() == 2 * 3 * 5);

  spec.episodes = 0;
  CHECK_THROWS_AS(run_batch(spec, index), std::invalid_argument);
}

TEST_CASE("the IBL clock keeps running across episodes") {
  GridConfig c = subset(Complexity::Complex, 1)[0];
  for (AgentKind kind : {AgentKind::IblEqual, AgentKind::IblExponential, AgentKind::IblTd}) {
    IblAgent agent(default_params(kind, c.complexity), c, 5);
    std::int64_t last = agent.memory().clock();
    CHECK(last == 1);
    std::int64_t steps = 0;
    for (int e = 1; e <= 40; ++e) {
      auto rec = run_episode(c, agent, 0, e);
      steps += static_cast<std::int64_t>(rec.steps.size());
      CHECK(agent.memory().clock() > last);
      last = agent.memory().clock();
    }
    CHECK(last == 1 + steps);
  }
}

TEST_CASE("seeds differ per config and run") {
  std::set<std::uint64_t> seeds;
  for (int r = 0; r < 3; ++r)
    for (const char* id : {"simple-00", "simple-01", "complex-00"}) seeds.insert(agent_seed(7, id, r));
  CHECK(seeds.size() == 9);
  CHECK(agent_seed(7, "simple-00", 0) != agent_seed(8, "simple-00", 0));
}
