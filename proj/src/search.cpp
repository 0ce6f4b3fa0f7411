#include "creditgrid/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "creditgrid/metrics.hpp"
#include "creditgrid/rng.hpp"

namespace creditgrid {

std::string_view to_string(Objective o) { return o == Objective::MaximizePmax ? "pmax" : "rmse"; }

Objective parse_objective(std::string_view s) {
  if (s == "pmax") return Objective::MaximizePmax;
  if (s == "rmse") return Objective::MinimizeRmse;
  throw std::invalid_argument("unknown objective: " + std::string(s));
}

const std::vector<std::string>& searchable_parameters() {
  static const std::vector<std::string> names{"sigma", "decay", "gamma", "alpha", "epsilon"};
  return names;
}

double get_parameter(const AgentParams& p, const std::string& name) {
  if (name == "sigma") return p.noise;
  if (name == "decay") return p.decay;
  if (name == "gamma") return p.discount;
  if (name == "alpha") return p.step_size;
  if (name == "epsilon") return p.epsilon;
  throw std::invalid_argument("unknown parameter: " + name);
}

void set_parameter(AgentParams& p, const std::string& name, double value) {
  if (name == "sigma") p.noise = value;
  else if (name == "decay") p.decay = value;
  else if (name == "gamma") p.discount = value;
  else if (name == "alpha") p.step_size = value;
  else if (name == "epsilon") p.epsilon = value;
  else throw std::invalid_argument("unknown parameter: " + name);
}

SearchSpace default_search_space(AgentKind kind) {
  SearchSpace space;
  space.base = default_params(kind, Complexity::Simple);
  const Interval unit{std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0)};
  switch (kind) {
    case AgentKind::IblEqual:
      space.bounds = {{"sigma", unit}, {"decay", unit}};
      break;
    case AgentKind::IblExponential:
      space.bounds = {{"sigma", unit}, {"decay", unit}, {"gamma", unit}};
      break;
    case AgentKind::IblTd:
      space.bounds = {{"sigma", unit}, {"decay", unit}, {"gamma", unit}, {"alpha", unit}};
      break;
    case AgentKind::QLearning:
      space.bounds = {{"gamma", unit}, {"alpha", unit}, {"epsilon", unit}};
      break;
  }
  return space;
}

void check_search_space(const SearchSpace& space) {
  if (space.trials < 1) throw std::invalid_argument("trials must be >= 1");
  const auto& names = searchable_parameters();
  for (const auto& [name, b] : space.bounds) {
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw std::invalid_argument("unknown parameter: " + name);
    if (!(b.lo > 0.0 && b.hi < 1.0 && b.lo <= b.hi))
      throw std::invalid_argument("bounds for " + name + " must satisfy 0 < lo <= hi < 1");
  }
  if (space.objective == Objective::MinimizeRmse && space.reference_curve.empty())
    throw std::invalid_argument("rmse objective needs a reference curve");
}

namespace {

AgentParams sample_point(const SearchSpace& space, std::uint64_t seed, int index) {
  Rng rng(derive_seed(seed, "trial", static_cast<std::uint64_t>(index)));
  AgentParams p = space.base;
  for (const std::string& name : searchable_parameters()) {
    auto it = space.bounds.find(name);
    if (it == space.bounds.end()) continue;
    double u = uniform_open01(rng);
    double v = it->second.lo + (it->second.hi - it->second.lo) * u;
    set_parameter(p, name, std::clamp(v, it->second.lo, it->second.hi));
  }
  return p;
}

bool better(Objective o, double a, double b) { return o == Objective::MaximizePmax ? a > b : a < b; }

double worst(Objective o) {
  return o == Objective::MaximizePmax ? -std::numeric_limits<double>::infinity()
                                      : std::numeric_limits<double>::infinity();
}

}  // namespace

SearchResult random_search(const SearchSpace& space, const Evaluator& evaluate, std::uint64_t seed,
                           unsigned workers) {
  check_search_space(space);
  SearchResult result;
  result.trials.resize(static_cast<std::size_t>(space.trials));

  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= space.trials) return;
      Trial& t = result.trials[static_cast<std::size_t>(i)];
      t.index = i;
      t.params = sample_point(space, seed, i);
      try {
        t.objective = evaluate(t.params);
        if (std::isnan(t.objective)) {
          t.objective = worst(space.objective);
          t.error = "objective is NaN";
        }
      } catch (const std::exception& e) {
        t.objective = worst(space.objective);
        t.error = e.what();
      }
    }
  };
  unsigned n = std::clamp(workers, 1u, static_cast<unsigned>(space.trials));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  result.best_index = 0;
  for (const Trial& t : result.trials) {
    if (better(space.objective, t.objective, result.trials[static_cast<std::size_t>(result.best_index)].objective))
      result.best_index = t.index;
  }
  const Trial& best = result.trials[static_cast<std::size_t>(result.best_index)];
  result.best = best.params;
  result.best_objective = best.objective;
  return result;
}

double rmse_to_curve(std::span<const double> model, std::span<const double> reference) {
  if (model.size() != reference.size()) throw std::invalid_argument("curves differ in length");
  if (model.empty()) throw std::invalid_argument("curves are empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    double d = model[i] - reference[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(model.size()));
}

namespace {

std::vector<MetricRow> batch_rows(const RunSpec& tmpl, const std::map<std::string, GridConfig>& configs,
                                  const AgentParams& p) {
  RunSpec spec = tmpl;
  spec.agent = p;
  spec.per_condition_defaults = false;
  auto batch = run_batch(spec, configs);
  if (!batch.failures.empty()) throw std::runtime_error("run failed: " + batch.failures.front().reason);
  std::vector<MetricRow> rows;
  rows.reserve(batch.records.size());
  for (const EpisodeRecord& r : batch.records) {
    rows.push_back({"all", r.config_id, r.run, r.episode, compute_metrics(r, configs.at(r.config_id))});
  }
  return rows;
}

}  // namespace

double batch_mean_pmax(const RunSpec& tmpl, const std::map<std::string, GridConfig>& configs, const AgentParams& p) {
  auto rows = batch_rows(tmpl, configs, p);
  if (rows.empty()) throw std::runtime_error("batch produced no episodes");
  double hits = 0.0;
  for (const MetricRow& r : rows) hits += r.metrics.pmax ? 1.0 : 0.0;
  return hits / static_cast<double>(rows.size());
}

std::vector<double> batch_pmax_curve(const RunSpec& tmpl, const std::map<std::string, GridConfig>& configs,
                                     const AgentParams& p) {
  auto rows = batch_rows(tmpl, configs, p);
  const std::vector<std::string> metric{"pmax"};
  auto curves = learning_curves(rows, metric);
  if (curves.empty()) throw std::runtime_error("batch produced no episodes");
  return curves.front().by_episode;
}

Evaluator batch_evaluator(const SearchSpace& space, const RunSpec& tmpl,
                          const std::map<std::string, GridConfig>& configs) {
  if (space.objective == Objective::MaximizePmax) {
    return [tmpl, &configs](const AgentParams& p) { return batch_mean_pmax(tmpl, configs, p); };
  }
  return [tmpl, &configs, ref = space.reference_curve](const AgentParams& p) {
    return rmse_to_curve(batch_pmax_curve(tmpl, configs, p), ref);
  };
}

std::vector<double> read_reference_curve(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("reference curve is empty");
  std::vector<double> curve;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 2) throw std::invalid_argument("reference curve rows need episode,value");
    if (std::stoi(fields[0]) != static_cast<int>(curve.size()) + 1)
      throw std::invalid_argument("reference curve episodes must run 1..N in order");
    curve.push_back(std::stod(fields[1]));
  }
  if (curve.empty()) throw std::invalid_argument("reference curve has no rows");
  return curve;
}

std::vector<double> read_reference_curve_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_reference_curve(in);
}

void write_reference_curve(std::ostream& out, std::span<const double> curve) {
  out << "episode,value\n";
  for (std::size_t i = 0; i < curve.size(); ++i) out << i + 1 << "," << format_double(curve[i]) << "\n";
}

void write_trials_csv(std::ostream& out, std::span<const Trial> trials) {
  out << kTrialsCsvHeader << "\n";
  for (const Trial& t : trials) {
    out << t.index;
    for (const std::string& name : searchable_parameters()) out << "," << format_double(get_parameter(t.params, name));
    std::string err = t.error.value_or("");
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << "," << format_double(t.objective) << "," << err << "\n";
  }
}

}  // namespace creditgrid
