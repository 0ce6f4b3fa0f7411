#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "creditgrid/agents.hpp"
#include "creditgrid/harness.hpp"

namespace creditgrid {

enum class Objective : std::uint8_t { MaximizePmax, MinimizeRmse };

std::string_view to_string(Objective o);
Objective parse_objective(std::string_view s);  // "pmax" | "rmse"

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Bounds are keyed by the AgentParams JSON names (sigma, decay, gamma, alpha, epsilon).
/// Parameters without bounds keep the value from `base`.
struct SearchSpace {
  AgentParams base;
  std::map<std::string, Interval> bounds;
  int trials = 1000;
  Objective objective = Objective::MaximizePmax;
  std::vector<double> reference_curve;  // MinimizeRmse only
};

/// Every parameter the kind uses, each over (0,1).
SearchSpace default_search_space(AgentKind kind);

/// Throws std::invalid_argument on unknown names, bounds outside (0,1), or trials < 1.
void check_search_space(const SearchSpace& space);

/// Parameter names in sampling order.
const std::vector<std::string>& searchable_parameters();
double get_parameter(const AgentParams& p, const std::string& name);
void set_parameter(AgentParams& p, const std::string& name, double value);

struct Trial {
  int index = 0;
  AgentParams params;
  double objective = 0.0;
  std::optional<std::string> error;
};

struct SearchResult {
  AgentParams best;
  double best_objective = 0.0;
  int best_index = 0;
  std::vector<Trial> trials;  // ordered by index
};

/// Scores one parameter setting. Must be deterministic for the search to be.
using Evaluator = std::function<double(const AgentParams&)>;

/// Trial i draws its point from derive_seed(seed, "trial", i), so a longer
/// search extends a shorter one with the same seed. Throwing evaluations
/// score as the worst possible value. Ties keep the earliest trial.
SearchResult random_search(const SearchSpace& space, const Evaluator& evaluate, std::uint64_t seed,
                           unsigned workers = 1);

/// Root mean squared per-episode difference; throws on length mismatch.
double rmse_to_curve(std::span<const double> model, std::span<const double> reference);

/// Mean pmax flag over every episode of a batch built from `tmpl` with the trial's params.
double batch_mean_pmax(const RunSpec& tmpl, const std::map<std::string, GridConfig>& configs, const AgentParams& p);

/// Per-episode pmax curve of a batch (runs averaged within config, then across configs).
std::vector<double> batch_pmax_curve(const RunSpec& tmpl, const std::map<std::string, GridConfig>& configs,
                                     const AgentParams& p);

/// Evaluator over full batch runs for the space's objective.
Evaluator batch_evaluator(const SearchSpace& space, const RunSpec& tmpl,
                          const std::map<std::string, GridConfig>& configs);

/// Reads "episode,value" rows (header required); episodes must be 1..N in order.
std::vector<double> read_reference_curve(std::istream& in);
std::vector<double> read_reference_curve_file(const std::string& path);
void write_reference_curve(std::ostream& out, std::span<const double> curve);

inline constexpr const char* kTrialsCsvHeader = "trial,sigma,decay,gamma,alpha,epsilon,objective,error";
void write_trials_csv(std::ostream& out, std::span<const Trial> trials);

}  // namespace creditgrid
