#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "creditgrid/agents.hpp"
#include "creditgrid/grid_gen.hpp"
#include "creditgrid/harness.hpp"
#include "creditgrid/io.hpp"
#include "creditgrid/metrics.hpp"
#include "creditgrid/search.hpp"
#include "creditgrid/server.hpp"

namespace fs = std::filesystem;
using namespace creditgrid;

namespace {

std::string g_command_line;

Manifest start_manifest(std::span<const GridConfig> configs, std::uint64_t seed) {
  Manifest m;
  m.config_set_hash = config_set_hash(configs);
  m.command_line = g_command_line;
  m.base_seed = seed;
  m.started_at = utc_timestamp();
  return m;
}

void finish_manifest(const std::string& dir, Manifest m) {
  m.finished_at = utc_timestamp();
  write_manifest(dir, m);
}

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<GridConfig> load_configs(const std::string& dir, const std::string& condition) {
  auto configs = load_config_dir(dir);
  if (!condition.empty()) {
    Complexity c = parse_complexity(condition);
    std::erase_if(configs, [&](const GridConfig& g) { return g.complexity != c; });
  }
  if (configs.empty()) throw std::runtime_error("no configs found in " + dir);
  return configs;
}

std::string padded(int i, int width) {
  std::string s = std::to_string(i);
  return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

// ---- gridgen

struct GridgenArgs {
  std::uint64_t seed = kReferenceSeed;
  std::string complexity = "simple";
  int count = 100;
  int n_obstacles = 0;
  double alpha = 1.0;
  bool reference = false;
  std::string out;
};

int cmd_gridgen(const GridgenArgs& a) {
  std::vector<GridConfig> configs;
  if (a.reference) {
    configs = reference_set();
  } else {
    Complexity c = parse_complexity(a.complexity);
    for (int i = 0; i < a.count; ++i) {
      GenSpec spec;
      spec.seed = derive_seed(a.seed, to_string(c), static_cast<std::uint64_t>(i));
      spec.complexity = c;
      spec.n_obstacles = a.n_obstacles;
      spec.dirichlet_alpha = a.alpha;
      spec.id = std::string(to_string(c)) + "-" + padded(i, 3);
      configs.push_back(generate(spec));
    }
  }
  fs::create_directories(a.out);
  Manifest m = start_manifest(configs, a.reference ? kReferenceSeed : a.seed);
  for (const GridConfig& c : configs) save_config(c, (fs::path(a.out) / (c.id + ".json")).string());
  finish_manifest(a.out, m);
  std::cout << "wrote " << configs.size() << " configs to " << a.out << "\n";
  return 0;
}

// ---- run

struct RunArgs {
  std::string agent;
  std::string params_file;
  std::string defaults = "auto";
  std::string configs;
  std::string condition;
  std::string out;
  int episodes = 40;
  int runs = 3;
  std::uint64_t seed = 0;
  unsigned workers = default_workers();
};

int cmd_run(const RunArgs& a) {
  auto configs = load_configs(a.configs, a.condition);
  RunSpec spec;
  spec.episodes = a.episodes;
  spec.runs_per_config = a.runs;
  spec.base_seed = a.seed;
  if (!a.params_file.empty()) {
    std::ifstream in(a.params_file);
    if (!in) throw std::runtime_error("cannot open " + a.params_file);
    spec.agent = nlohmann::json::parse(in).get<AgentParams>();
    if (!a.agent.empty() && spec.agent.kind != parse_agent_kind(a.agent))
      throw std::invalid_argument("--agent disagrees with the kind in " + a.params_file);
  } else {
    if (a.agent.empty()) throw std::invalid_argument("--agent is required without --params");
    AgentKind kind = parse_agent_kind(a.agent);
    if (a.defaults == "auto") {
      spec.agent.kind = kind;
      spec.per_condition_defaults = true;
    } else {
      spec.agent = default_params(kind, parse_complexity(a.defaults));
    }
  }
  for (const GridConfig& c : configs) spec.config_ids.push_back(c.id);

  Manifest m = start_manifest(configs, a.seed);
  auto result = run_batch_to_dir(spec, index_configs(configs), a.out, a.workers);
  finish_manifest(a.out, m);
  std::size_t runs = spec.config_ids.size() * static_cast<std::size_t>(spec.runs_per_config) - result.failures.size();
  std::cout << "completed " << runs << " agent runs (" << result.failures.size() << " failed) into " << a.out << "\n";
  return result.failures.empty() ? 0 : 3;
}

// ---- metrics

struct MetricsArgs {
  std::string configs;
  std::vector<std::string> runs;  // LABEL=PATH
  std::string out;
  std::string reference_label;
  bool plots = false;
};

int cmd_metrics(const MetricsArgs& a) {
  auto configs = load_config_dir(a.configs);
  auto by_id = index_configs(configs);
  std::vector<MetricRow> rows;
  for (const std::string& spec : a.runs) {
    auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--run expects LABEL=PATH, got " + spec);
    std::string label = spec.substr(0, eq);
    fs::path path = spec.substr(eq + 1);
    if (fs::is_directory(path)) path /= "steps.csv";
    auto records = read_steps_csv_file(path.string());
    for (EpisodeRecord& r : records) {
      auto it = by_id.find(r.config_id);
      if (it == by_id.end()) throw std::runtime_error(path.string() + ": unknown config " + r.config_id);
      attach_config(r, it->second);
      rows.push_back({label + "/" + std::string(to_string(it->second.complexity)), r.config_id, r.run, r.episode,
                      compute_metrics(r, it->second)});
    }
  }
  if (rows.empty()) std::cerr << "warning: no episodes found\n";

  fs::create_directories(a.out);
  Manifest m = start_manifest(configs, 0);
  auto curves = rows.empty() ? std::vector<Curve>{} : learning_curves(rows, metric_names());
  {
    std::ofstream out(fs::path(a.out) / "metrics.csv", std::ios::binary);
    write_metric_rows_csv(out, rows);
  }
  {
    std::ofstream out(fs::path(a.out) / "curves.csv", std::ios::binary);
    write_curves_csv(out, curves);
  }
  {
    std::ofstream out(fs::path(a.out) / "summary.csv", std::ios::binary);
    std::optional<std::string> ref;
    if (!a.reference_label.empty()) ref = a.reference_label;
    write_summary_csv(out, curves, ref);
  }
  if (a.plots) {
    std::vector<Curve> plotted;
    for (const Curve& c : curves)
      if (c.metric == "pmax" || c.metric == "poptimal") plotted.push_back(c);
    auto files = emit_plots(plotted, (fs::path(a.out) / "plots").string());
    std::cout << "wrote " << files.size() << " plots\n";
  }
  finish_manifest(a.out, m);
  for (const Curve& c : curves)
    if (c.metric == "pmax" || c.metric == "poptimal")
      std::cout << c.group << " " << c.metric << " " << format_double(c.overall) << "\n";
  return 0;
}

// ---- search

struct SearchArgs {
  std::string agent;
  std::string objective = "pmax";
  std::string reference;
  int trials = 1000;
  std::uint64_t seed = 0;
  std::string configs;
  std::string condition;
  int max_configs = 0;
  int runs = 3;
  int episodes = 40;
  unsigned workers = default_workers();
  std::string out;
};

int cmd_search(const SearchArgs& a) {
  AgentKind kind = parse_agent_kind(a.agent);
  auto configs = load_configs(a.configs, a.condition);
  if (a.max_configs > 0 && static_cast<int>(configs.size()) > a.max_configs) configs.resize(a.max_configs);
  auto by_id = index_configs(configs);

  SearchSpace space = default_search_space(kind);
  if (!a.condition.empty()) space.base = default_params(kind, parse_complexity(a.condition));
  space.trials = a.trials;
  space.objective = parse_objective(a.objective);
  if (space.objective == Objective::MinimizeRmse) {
    if (a.reference.empty()) throw std::invalid_argument("--reference is required for the rmse objective");
    space.reference_curve = read_reference_curve_file(a.reference);
  }

  RunSpec tmpl;
  for (const GridConfig& c : configs) tmpl.config_ids.push_back(c.id);
  tmpl.runs_per_config = a.runs;
  tmpl.episodes = a.episodes;
  tmpl.base_seed = a.seed;
  if (space.objective == Objective::MinimizeRmse && space.reference_curve.size() != static_cast<std::size_t>(a.episodes))
    throw std::invalid_argument("reference curve length must equal --episodes");

  Manifest m = start_manifest(configs, a.seed);
  auto result = random_search(space, batch_evaluator(space, tmpl, by_id), a.seed, a.workers);
  fs::create_directories(a.out);
  {
    std::ofstream out(fs::path(a.out) / "trials.csv", std::ios::binary);
    write_trials_csv(out, result.trials);
  }
  {
    std::ofstream out(fs::path(a.out) / "best.json", std::ios::binary);
    nlohmann::json j = result.best;
    out << j.dump(2) << "\n";
  }
  finish_manifest(a.out, m);
  std::cout << "best trial " << result.best_index << " " << to_string(space.objective) << "="
            << format_double(result.best_objective) << " " << nlohmann::json(result.best).dump() << "\n";
  return 0;
}

// ---- serve

struct ServeArgs {
  std::string configs;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string data;
  std::string static_dir;
  bool shuffle = false;
  std::uint64_t seed = 0;
};

httplib::Server* g_server = nullptr;

int cmd_serve(ServeArgs a) {
  if (const char* p = std::getenv("CREDITGRID_PORT")) a.port = std::stoi(p);
  if (const char* d = std::getenv("CREDITGRID_DATA")) a.data = d;
  if (a.data.empty()) throw std::invalid_argument("--data (or CREDITGRID_DATA) is required");
  auto configs = load_config_dir(a.configs);
  Manifest m = start_manifest(configs, a.seed);
  TaskService service(configs, {a.data, a.shuffle, a.seed});
  write_manifest(a.data, m);

  httplib::Server server;
  mount_routes(server, service);
  if (!a.static_dir.empty() && !server.set_mount_point("/", a.static_dir))
    throw std::runtime_error("cannot serve static files from " + a.static_dir);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "serving " << configs.size() << " configs on http://" << a.host << ":" << a.port << " ("
            << service.session_count() << " sessions restored)" << std::endl;
  if (!server.listen(a.host, a.port)) throw std::runtime_error("cannot listen on port " + std::to_string(a.port));
  return 0;
}

// ---- validate

struct ValidateArgs {
  std::string dir;
  std::string runs;
};

int cmd_validate(const ValidateArgs& a) {
  auto configs = load_config_dir(a.dir);
  int bad = 0;
  for (const GridConfig& c : configs) {
    auto issues = validate(c);
    if (issues.empty()) {
      int delta = measured_delta(c);
      if (delta != complexity_delta(c.complexity))
        issues.push_back("decision complexity " + std::to_string(delta) + " does not match " +
                         std::string(to_string(c.complexity)));
    }
    for (const std::string& i : issues) std::cout << c.id << ": " << i << "\n";
    if (!issues.empty()) ++bad;
  }
  std::cout << configs.size() - static_cast<std::size_t>(bad) << "/" << configs.size() << " configs valid\n";

  if (!a.runs.empty()) {
    auto by_id = index_configs(configs);
    fs::path path = a.runs;
    if (fs::is_directory(path)) path /= "steps.csv";
    auto records = read_steps_csv_file(path.string());
    int bad_records = 0;
    for (EpisodeRecord& r : records) {
      auto it = by_id.find(r.config_id);
      std::string problem;
      if (it == by_id.end()) {
        problem = "unknown config";
      } else {
        try {
          attach_config(r, it->second);
        } catch (const std::exception& e) {
          problem = e.what();
        }
      }
      if (!problem.empty()) {
        ++bad_records;
        std::cout << r.config_id << "/" << r.run << "/" << r.episode << ": " << problem << "\n";
      }
    }
    std::cout << records.size() - static_cast<std::size_t>(bad_records) << "/" << records.size()
              << " episode records valid\n";
    bad += bad_records;
  }
  return bad == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  g_command_line = join_command_line(argc, argv);
  CLI::App app{"Credit assignment experiments on complexity-controlled gridworlds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);

  GridgenArgs gen;
  auto* gen_cmd = app.add_subcommand("gridgen", "Generate gridworld configs");
  gen_cmd->add_option("--seed", gen.seed, "Base seed");
  gen_cmd->add_option("--complexity", gen.complexity, "simple or complex")->check(CLI::IsMember({"simple", "complex"}));
  gen_cmd->add_option("--count", gen.count, "Number of configs")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--obstacles", gen.n_obstacles, "Obstacle segments (0 draws 1-3)")->check(CLI::Range(0, 3));
  gen_cmd->add_option("--alpha", gen.alpha, "Dirichlet concentration")->check(CLI::PositiveNumber);
  gen_cmd->add_flag("--reference", gen.reference, "Write the fixed 64 simple + 62 complex reference set");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run agents over a config set");
  run_cmd->add_option("--agent", run.agent, "ibl-equal, ibl-exponential, ibl-td or q-learning");
  run_cmd->add_option("--params", run.params_file, "AgentParams JSON file");
  run_cmd->add_option("--defaults", run.defaults, "simple, complex, or auto (each config's own condition)")
      ->check(CLI::IsMember({"simple", "complex", "auto"}));
  run_cmd->add_option("--configs", run.configs, "Config directory")->required();
  run_cmd->add_option("--condition", run.condition, "Only configs of this condition")
      ->check(CLI::IsMember({"simple", "complex"}));
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--episodes", run.episodes)->check(CLI::PositiveNumber);
  run_cmd->add_option("--runs", run.runs, "Runs per config")->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", run.seed, "Base seed");
  run_cmd->add_option("--workers", run.workers)->check(CLI::PositiveNumber);

  MetricsArgs met;
  auto* met_cmd = app.add_subcommand("metrics", "Compute metrics, learning curves and plots");
  met_cmd->add_option("--configs", met.configs, "Config directory")->required();
  met_cmd->add_option("--run", met.runs, "LABEL=PATH to a run directory or steps CSV")->required();
  met_cmd->add_option("--out", met.out, "Output directory")->required();
  met_cmd->add_option("--reference-label", met.reference_label, "Label the summary differences are taken against");
  met_cmd->add_flag("--plots", met.plots, "Write SVG learning curves");

  SearchArgs sea;
  auto* sea_cmd = app.add_subcommand("search", "Random parameter search");
  sea_cmd->add_option("--agent", sea.agent)->required();
  sea_cmd->add_option("--objective", sea.objective)->check(CLI::IsMember({"pmax", "rmse"}));
  sea_cmd->add_option("--reference", sea.reference, "Reference curve CSV (episode,value)");
  sea_cmd->add_option("--trials", sea.trials)->check(CLI::PositiveNumber);
  sea_cmd->add_option("--seed", sea.seed);
  sea_cmd->add_option("--configs", sea.configs, "Config directory")->required();
  sea_cmd->add_option("--condition", sea.condition)->check(CLI::IsMember({"simple", "complex"}));
  sea_cmd->add_option("--max-configs", sea.max_configs, "Evaluate on the first N configs only");
  sea_cmd->add_option("--runs", sea.runs, "Runs per config per trial")->check(CLI::PositiveNumber);
  sea_cmd->add_option("--episodes", sea.episodes)->check(CLI::PositiveNumber);
  sea_cmd->add_option("--workers", sea.workers)->check(CLI::PositiveNumber);
  sea_cmd->add_option("--out", sea.out, "Output directory")->required();

  ServeArgs srv;
  auto* srv_cmd = app.add_subcommand("serve", "Run the experiment server");
  srv_cmd->add_option("--configs", srv.configs, "Config directory")->required();
  srv_cmd->add_option("--port", srv.port)->check(CLI::Range(1, 65535));
  srv_cmd->add_option("--host", srv.host);
  srv_cmd->add_option("--data", srv.data, "Session log directory");
  srv_cmd->add_option("--static", srv.static_dir, "Serve a built task UI from this directory");
  srv_cmd->add_flag("--shuffle", srv.shuffle, "Randomize config assignment order");
  srv_cmd->add_option("--seed", srv.seed, "Seed for --shuffle");

  ValidateArgs val;
  auto* val_cmd = app.add_subcommand("validate", "Check configs (and optionally run records)");
  val_cmd->add_option("dir", val.dir, "Config directory")->required();
  val_cmd->add_option("--runs", val.runs, "Run directory or steps CSV to check against the configs");

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (*gen_cmd) return cmd_gridgen(gen);
    if (*run_cmd) return cmd_run(run);
    if (*met_cmd) return cmd_metrics(met);
    if (*sea_cmd) return cmd_search(sea);
    if (*srv_cmd) return cmd_serve(srv);
    if (*val_cmd) return cmd_validate(val);
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"command", name}, {"error", e.what()}}.dump() << "\n";
    return 2;
  }
  return 1;
}
