#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "creditgrid/grid_gen.hpp"
#include "creditgrid/search.hpp"

using namespace creditgrid;

namespace {

struct TinySetup {
  std::vector<GridConfig> configs;
  std::map<std::string, GridConfig> index;
  RunSpec tmpl;
};

TinySetup tiny(AgentKind kind) {
  TinySetup s;
  for (int i = 0; i < 3; ++i) {
    GenSpec g;
    g.seed = derive_seed(31, static_cast<std::uint64_t>(i));
    g.width = 7;
    g.height = 7;
    g.n_obstacles = 1;
    g.min_preferred_distance = 2;
    g.max_preferred_distance = 4;
    GridConfig c = generate(g);
    c.id = "tiny-" + std::to_string(i);
    s.configs.push_back(c);
  }
  s.index = index_configs(s.configs);
  for (const auto& c : s.configs) s.tmpl.config_ids.push_back(c.id);
  s.tmpl.agent = default_params(kind, Complexity::Simple);
  s.tmpl.episodes = 10;
  s.tmpl.runs_per_config = 1;
  s.tmpl.base_seed = 3;
  return s;
}

}  // namespace

TEST_CASE("rmse examples and properties") {
  std::vector<double> a{0.2, 0.4, 0.6}, b{0.3, 0.5, 0.7};
  CHECK(rmse_to_curve(a, a) == 0.0);
  CHECK(rmse_to_curve(a, b) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(rmse_to_curve(std::vector<double>{0, 1}, std::vector<double>{1, 0}) == 1.0);
  CHECK(rmse_to_curve(a, b) == rmse_to_curve(b, a));
  CHECK_THROWS_AS(rmse_to_curve(a, std::vector<double>{0.1}), std::invalid_argument);
  CHECK_THROWS(rmse_to_curve(std::vector<double>{}, std::vector<double>{}));
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x(40), y(40);
    for (auto& v : x) v = uniform_open01(rng);
    for (auto& v : y) v = uniform_open01(rng);
    CHECK(rmse_to_curve(x, y) > 0.0);
    CHECK(rmse_to_curve(x, y) == rmse_to_curve(y, x));
  }
}

TEST_CASE("search spaces are validated") {
  SearchSpace s = default_search_space(AgentKind::IblTd);
  CHECK(s.bounds.size() == 4);
  CHECK_NOTHROW(check_search_space(s));
  CHECK(default_search_space(AgentKind::IblEqual).bounds.size() == 2);
  CHECK(default_search_space(AgentKind::QLearning).bounds.count("epsilon"));

  SearchSpace bad = s;
  bad.bounds["sigma"] = {0.0, 0.5};
  CHECK_THROWS_AS(check_search_space(bad), std::invalid_argument);
  bad = s;
  bad.bounds["zeta"] = {0.1, 0.2};
  CHECK_THROWS_AS(check_search_space(bad), std::invalid_argument);
  bad = s;
  bad.trials = 0;
  CHECK_THROWS_AS(check_search_space(bad), std::invalid_argument);
  bad = s;
  bad.objective = Objective::MinimizeRmse;
  CHECK_THROWS_AS(check_search_space(bad), std::invalid_argument);
  CHECK(parse_objective("rmse") == Objective::MinimizeRmse);
  CHECK(to_string(Objective::MaximizePmax) == "pmax");

  AgentParams p;
  for (const auto& name : searchable_parameters()) {
    set_parameter(p, name, 0.123);
    CHECK(get_parameter(p, name) == 0.123);
  }
}

TEST_CASE("the trial whose agent always hits wins") {
  SearchSpace s = default_search_space(AgentKind::IblEqual);
  s.trials = 2;
  auto first = random_search(s, [](const AgentParams&) { return 0.0; }, 5);
  double hitter_sigma = first.trials[1].params.noise;
  auto result = random_search(s, [&](const AgentParams& p) { return p.noise == hitter_sigma ? 1.0 : 0.2; }, 5);
  CHECK(result.best_index == 1);
  CHECK(result.best_objective == 1.0);
  CHECK(result.best.noise == hitter_sigma);
}

TEST_CASE("a point interval returns that point") {
  SearchSpace s = default_search_space(AgentKind::IblTd);
  s.bounds = {{"sigma", {0.3, 0.3}}, {"decay", {0.7, 0.7}}};
  s.trials = 5;
  auto r = random_search(s, [](const AgentParams& p) { return p.step_size; }, 1);
  for (const Trial& t : r.trials) {
    CHECK(t.params.noise == 0.3);
    CHECK(t.params.decay == 0.7);
    CHECK(t.params.discount == s.base.discount);
  }
}

TEST_CASE("sampled points stay inside their bounds") {
  SearchSpace s = default_search_space(AgentKind::QLearning);
  s.bounds["alpha"] = {0.2, 0.4};
  s.trials = 300;
  auto r = random_search(s, [](const AgentParams&) { return 0.5; }, 8);
  CHECK(r.best_index == 0);
  for (const Trial& t : r.trials) {
    CHECK(t.params.step_size >= 0.2);
    CHECK(t.params.step_size <= 0.4);
    CHECK(t.params.epsilon > 0.0);
    CHECK(t.params.epsilon < 1.0);
  }
}

TEST_CASE("failed evaluations score as the worst value") {
  SearchSpace s = default_search_space(AgentKind::IblEqual);
  s.trials = 6;
  int n = 0;
  auto r = random_search(s, [&](const AgentParams& p) {
    if (n++ % 2 == 0) throw std::runtime_error("boom, twice");
    return p.decay;
  }, 4);
  int errors = 0;
  for (const Trial& t : r.trials) {
    if (t.error) {
      ++errors;
      CHECK(t.objective == -std::numeric_limits<double>::infinity());
    }
  }
  CHECK(errors == 3);
  CHECK_FALSE(r.trials[static_cast<std::size_t>(r.best_index)].error);

  s.objective = Objective::MinimizeRmse;
  s.reference_curve = {0.5};
  auto nan = random_search(s, [](const AgentParams&) { return std::nan(""); }, 4);
  for (const Trial& t : nan.trials) CHECK(t.objective == std::numeric_limits<double>::infinity());

  std::ostringstream out;
  write_trials_csv(out, r.trials);
  CHECK(out.str().rfind(std::string(kTrialsCsvHeader) + "\n", 0) == 0);
  CHECK(out.str().find("boom; twice") != std::string::npos);
}

TEST_CASE("longer searches extend shorter ones and never do worse") {
  SearchSpace s = default_search_space(AgentKind::IblTd);
  auto eval = [](const AgentParams& p) { return -std::abs(p.noise - 0.3) - std::abs(p.step_size - 0.6); };
  double prev = -1e9;
  SearchResult last;
  for (int n : {1, 5, 20, 80}) {
    s.trials = n;
    auto r = random_search(s, eval, 12);
    CHECK(r.best_objective >= prev);
    prev = r.best_objective;
    for (std::size_t i = 0; i < last.trials.size(); ++i) CHECK(r.trials[i].params == last.trials[i].params);
    last = r;
  }
  s.trials = 80;
  auto parallel = random_search(s, eval, 12, 4);
  for (std::size_t i = 0; i < last.trials.size(); ++i) {
    CHECK(parallel.trials[i].params == last.trials[i].params);
    CHECK(parallel.trials[i].objective == last.trials[i].objective);
  }
}

TEST_CASE("batch search on tiny configs beats its own median and re-evaluates exactly") {
  TinySetup t = tiny(AgentKind::IblTd);
  SearchSpace s = default_search_space(AgentKind::IblTd);
  s.base = t.tmpl.agent;
  s.trials = 50;
  auto eval = batch_evaluator(s, t.tmpl, t.index);
  auto r = random_search(s, eval, 21, 2);
  std::vector<double> scores;
  for (const Trial& tr : r.trials) scores.push_back(tr.objective);
  std::sort(scores.begin(), scores.end());
  double median = (scores[24] + scores[25]) / 2;
  CHECK(r.best_objective > median);
  CHECK(batch_mean_pmax(t.tmpl, t.index, r.best) == r.best_objective);

  auto curve = batch_pmax_curve(t.tmpl, t.index, r.best);
  REQUIRE(curve.size() == 10);
  double mean = 0.0;
  for (double v : curve) mean += v / 10.0;
  CHECK(mean == doctest::Approx(r.best_objective).epsilon(1e-12));

  SearchSpace fit = s;
  fit.objective = Objective::MinimizeRmse;
  fit.reference_curve = curve;
  fit.trials = 10;
  auto fitted = random_search(fit, batch_evaluator(fit, t.tmpl, t.index), 21);
  CHECK(fitted.best_objective <= fitted.trials[0].objective);
  CHECK(rmse_to_curve(batch_pmax_curve(t.tmpl, t.index, fitted.best), curve) == fitted.best_objective);
}

TEST_CASE("reference curves round-trip") {
  std::vector<double> curve{0.1, 0.25, 1.0 / 3};
  std::ostringstream out;
  write_reference_curve(out, curve);
  std::istringstream in(out.str());
  CHECK(read_reference_curve(in) == curve);
  std::istringstream gap("episode,value\n1,0.1\n3,0.2\n");
  CHECK_THROWS_AS(read_reference_curve(gap), std::invalid_argument);
}
