#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "creditgrid/grid_gen.hpp"
#include "creditgrid/rng.hpp"
#include "oracles.hpp"

using namespace creditgrid;

namespace {

GenSpec spec_for(Complexity c, std::uint64_t seed) {
  GenSpec s;
  s.seed = seed;
  s.complexity = c;
  return s;
}

int oracle_delta(const GridConfig& c) {
  std::size_t pref = c.preferred_target();
  auto d = oracle::relax_distances(c, c.spawn);
  int near = oracle::kInf;
  for (std::size_t i = 0; i < c.targets.size(); ++i)
    if (i != pref) near = std::min(near, d.at(c.targets[i].pos));
  return d.at(c.targets[pref].pos) - near;
}

}  // namespace

TEST_CASE("generated configs have the requested decision complexity") {
  for (Complexity cx : {Complexity::Simple, Complexity::Complex}) {
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
      GridConfig c = generate(spec_for(cx, derive_seed(77, seed)));
      INFO(to_json_string(c));
      CHECK(validate(c).empty());
      CHECK(oracle_delta(c) == complexity_delta(cx));
      CHECK(measured_delta(c) == complexity_delta(cx));
      Coord pref = c.targets[c.preferred_target()].pos;
      if (cx == Complexity::Simple) {
        CHECK(straight_line_clear(c, c.spawn, pref));
      } else {
        CHECK(direct_routes_blocked(c, c.spawn, pref));
      }
    }
  }
}

TEST_CASE("target values form a Dirichlet draw") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GridConfig c = generate(spec_for(seed % 2 ? Complexity::Complex : Complexity::Simple, seed));
    double sum = 0.0;
    for (const Target& t : c.targets) {
      CHECK(t.value > 0.0);
      CHECK(t.value < 1.0);
      sum += t.value;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("obstacles are one to three segments that isolate no target") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GenSpec s = spec_for(Complexity::Simple, seed);
    s.n_obstacles = 1 + static_cast<int>(seed % 3);
    GridConfig c = generate(s);
    CHECK(!c.obstacles.empty());
    // A single segment is at most max(|dx|,|dy|)+1 <= 11 cells.
    CHECK(c.obstacles.size() <= static_cast<std::size_t>(11 * s.n_obstacles));
    auto d = oracle::relax_distances(c, c.spawn);
    for (const Target& t : c.targets) CHECK(d.at(t.pos) < oracle::kInf);
  }
}

TEST_CASE("same seed gives byte-identical JSON") {
  for (Complexity cx : {Complexity::Simple, Complexity::Complex}) {
    auto a = to_json_string(generate(spec_for(cx, 1234)));
    auto b = to_json_string(generate(spec_for(cx, 1234)));
    CHECK(a == b);
    CHECK(a != to_json_string(generate(spec_for(cx, 1235))));
  }
}

TEST_CASE("infeasible specs fail with a generation error") {
  GenSpec s = spec_for(Complexity::Complex, 1);
  s.width = 2;
  s.height = 2;
  s.max_attempts = 5;
  CHECK_THROWS_AS(generate(s), GenerationError);
  s.n_obstacles = 4;
  CHECK_THROWS_AS(generate(s), std::invalid_argument);
}

TEST_CASE("rasterized segments are connected and include both endpoints") {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    Coord a{static_cast<int>(uniform_index(rng, 11)), static_cast<int>(uniform_index(rng, 11))};
    Coord b{static_cast<int>(uniform_index(rng, 11)), static_cast<int>(uniform_index(rng, 11))};
    auto cells = rasterize_segment(a, b);
    CHECK(cells.front() == a);
    CHECK(cells.back() == b);
    CHECK(cells.size() == static_cast<std::size_t>(std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)) + 1));
    for (std::size_t k = 1; k < cells.size(); ++k) {
      CHECK(std::abs(cells[k].x - cells[k - 1].x) <= 1);
      CHECK(std::abs(cells[k].y - cells[k - 1].y) <= 1);
    }
  }
  CHECK(rasterize_segment({0, 0}, {3, 0}) == std::vector<Coord>{{0, 0}, {1, 0}, {2, 0}, {3, 0}});
}

TEST_CASE("validate names broken invariants") {
  GridConfig c;
  c.id = "v";
  c.width = 7;
  c.height = 7;
  c.spawn = {0, 3};
  c.targets = {{{6, 3}, 0.4}, {{1, 3}, 0.3}, {{0, 0}, 0.2}, {{0, 6}, 0.1}};
  CHECK(validate(c).empty());

  GridConfig overlap = c;
  overlap.targets[3].pos = overlap.targets[2].pos;
  auto issues = validate(overlap);
  CHECK(std::find(issues.begin(), issues.end(), "targets overlap") != issues.end());

  // Preferred 0.30 is 6 steps away (net 0.24); a 0.29 distractor is 1 step away (net 0.28).
  GridConfig net = c;
  net.targets = {{{6, 3}, 0.30}, {{1, 3}, 0.29}, {{0, 0}, 0.21}, {{0, 6}, 0.20}};
  CHECK(oracle::distance(net, net.spawn, {6, 3}) == 6);
  CHECK(oracle::distance(net, net.spawn, {1, 3}) == 1);
  CHECK(validate(net) == std::vector<std::string>{"net-reward ordering violated"});

  GridConfig walled = c;
  walled.obstacles = {{5, 2}, {5, 3}, {5, 4}, {6, 2}, {6, 4}};
  issues = validate(walled);
  CHECK(std::find(issues.begin(), issues.end(), "target unreachable from spawn") != issues.end());

  GridConfig tie = c;
  tie.targets[3].value = tie.targets[2].value;
  issues = validate(tie);
  CHECK(std::find(issues.begin(), issues.end(), "target values not distinct") != issues.end());

  GridConfig on_spawn = c;
  on_spawn.obstacles = {c.spawn};
  issues = validate(on_spawn);
  CHECK(std::find(issues.begin(), issues.end(), "spawn on obstacle") != issues.end());
}

TEST_CASE("reference set has the documented shape") {
  auto ref = reference_set();
  REQUIRE(ref.size() == 126);
  CHECK(std::count_if(ref.begin(), ref.end(), [](const GridConfig& c) { return c.complexity == Complexity::Simple; }) ==
        64);
  CHECK(ref.front().id == "simple-00");
  CHECK(ref.back().id == "complex-61");
  std::set<std::string> ids;
  for (const GridConfig& c : ref) ids.insert(c.id);
  CHECK(ids.size() == 126);
  CHECK(to_json_string(ref[5]) == to_json_string(generate(reference_spec(Complexity::Simple, 5))));
}
