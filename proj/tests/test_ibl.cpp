#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "creditgrid/ibl.hpp"
#include "oracles.hpp"

using namespace creditgrid;

namespace {

const OptionKey kA{{0, 0}, Direction::Up};
const OptionKey kB{{0, 0}, Direction::Down};

MemoryParams noiseless(double decay = 0.5) { return MemoryParams{decay, 0.0, 0.4}; }

struct RandomMemory {
  std::vector<oracle::MemoryInstance> instances;  // ascending outcome
  std::int64_t now = 0;
};

RandomMemory random_memory(Rng& rng) {
  RandomMemory m;
  std::size_t n = 1 + uniform_index(rng, 4);
  std::set<int> outcomes;
  while (outcomes.size() < n) outcomes.insert(static_cast<int>(uniform_index(rng, 2001)) - 1000);
  m.now = 2 + static_cast<std::int64_t>(uniform_index(rng, 200));
  for (int o : outcomes) {
    oracle::MemoryInstance inst;
    inst.outcome = o / 1000.0;
    std::set<std::int64_t> ts;
    std::size_t k = 1 + uniform_index(rng, 5);
    for (std::size_t j = 0; j < k; ++j) ts.insert(static_cast<std::int64_t>(uniform_index(rng, m.now)));
    inst.timestamps.assign(ts.begin(), ts.end());
    m.instances.push_back(inst);
  }
  return m;
}

InstanceMemory build(const RandomMemory& m, MemoryParams p, std::uint64_t seed) {
  InstanceMemory mem(p, seed);
  for (std::int64_t t = 1; t < m.now; ++t) mem.advance_clock();
  for (const auto& inst : m.instances)
    for (auto ts : inst.timestamps) mem.store_at(kA, inst.outcome, ts);
  return mem;
}

std::vector<double> draws(Rng& rng, std::size_t n) {
  std::vector<double> xs;
  for (std::size_t i = 0; i < n; ++i) xs.push_back(uniform_open01(rng));
  return xs;
}

}  // namespace

TEST_CASE("store merges identical outcomes and keeps distinct ones apart") {
  InstanceMemory mem(noiseless(), 1);
  mem.store(kA, 0.8);
  mem.advance_clock();
  mem.store(kA, 0.8);
  REQUIRE(mem.instances(kA).size() == 1);
  CHECK(mem.instances(kA)[0].timestamps == std::vector<std::int64_t>{1, 2});
  mem.store(kA, 0.3);
  CHECK(mem.instances(kA).size() == 2);
  mem.store(kA, 0.8 + 1e-14);
  CHECK(mem.instances(kA).size() == 2);
}

TEST_CASE("prepopulate seeds one default instance per option") {
  InstanceMemory mem(noiseless(), 1);
  std::vector<OptionKey> all;
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 11; ++x)
      for (const OptionKey& k : options_at({x, y})) all.push_back(k);
  mem.prepopulate(all);
  CHECK(mem.instance_count() == 484);
  CHECK(mem.clock() == 1);
  REQUIRE(mem.instances(kA).size() == 1);
  CHECK(mem.instances(kA)[0].outcome == 0.4);
  CHECK(mem.instances(kA)[0].timestamps == std::vector<std::int64_t>{0});
  CHECK(mem.blended_value({{7, 3}, Direction::Left}) == doctest::Approx(0.4).epsilon(1e-15));
  mem.store(kA, 0.1);
  CHECK(mem.instances(kA).size() == 2);
  CHECK_THROWS_AS(mem.prepopulate(all), ContractViolation);
}

TEST_CASE("clock only moves forward") {
  InstanceMemory mem(noiseless(), 1);
  CHECK(mem.clock() == 1);
  for (int i = 0; i < 31; ++i) mem.advance_clock();
  CHECK(mem.clock() == 32);
  for (int i = 0; i < 39 * 31; ++i) mem.advance_clock();
  CHECK(mem.clock() == 1241);
  CHECK_THROWS_AS(mem.store_at(kA, 0.1, 1242), ContractViolation);
}

TEST_CASE("activation examples") {
  std::vector<std::int64_t> one{1};
  CHECK(base_activation(one, 2, 0.5) == 0.0);
  std::vector<std::int64_t> two{1, 2};
  CHECK(base_activation(two, 3, 0.5) == doctest::Approx(0.5347999967395703).epsilon(1e-12));
  CHECK(activation_noise(0.7, 0.5) == 0.0);
  CHECK_THROWS_AS(base_activation(two, 2, 0.5), ContractViolation);
}

TEST_CASE("retrieval weight examples") {
  std::vector<double> single{-3.0};
  CHECK(retrieval_weights(single, 0.25) == std::vector<double>{1.0});
  std::vector<double> tied{0.2, 0.2};
  CHECK(retrieval_weights(tied, 0.0) == std::vector<double>{0.5, 0.5});
  double tau = 0.3 * std::sqrt(2.0);
  std::vector<double> acts{0.0, tau * std::log(2.0)};
  auto p = retrieval_weights(acts, 0.3);
  CHECK(p[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  std::vector<double> huge{1e6, 1e6 - 1.0, -1e6};
  auto q = retrieval_weights(huge, 0.1);
  for (double x : q) CHECK(std::isfinite(x));
  CHECK(q[0] + q[1] + q[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("blended value examples") {
  InstanceMemory mem(noiseless(), 1);
  mem.store(kA, 0.0);
  mem.store(kA, 1.0);
  mem.advance_clock();
  CHECK(mem.blended_value(kA) == doctest::Approx(0.5).epsilon(1e-15));

  double tau = 0.3 * std::sqrt(2.0);
  std::vector<double> acts{0.0, tau * std::log(2.0)};
  auto p = retrieval_weights(acts, 0.3);
  double blend = p[0] * 0.2 + p[1] * 0.6;
  CHECK(blend == doctest::Approx(0.4666666666666666).epsilon(1e-12));
  CHECK_THROWS_AS(mem.blended_value(kB), ContractViolation);
}

TEST_CASE("choose picks the highest blend and splits exact ties evenly") {
  InstanceMemory mem(noiseless(), 3);
  mem.store(kA, 0.4);
  mem.store(kB, 0.9);
  mem.advance_clock();
  std::vector<OptionKey> one{kA};
  CHECK(mem.choose(one) == kA);
  std::vector<OptionKey> both{kA, kB};
  for (int i = 0; i < 50; ++i) CHECK(mem.choose(both) == kB);

  InstanceMemory tie(noiseless(), 9);
  tie.store(kA, 0.5);
  tie.store(kB, 0.5);
  tie.advance_clock();
  int first = 0;
  for (int i = 0; i < 10000; ++i) first += tie.choose(both) == kA;
  CHECK(std::abs(first / 10000.0 - 0.5) < 0.02);
}

TEST_CASE("retract removes one timestamp and drops empty instances") {
  InstanceMemory mem(noiseless(), 1);
  mem.store(kA, 0.2);
  mem.advance_clock();
  mem.store(kA, 0.2);
  CHECK(mem.retract(kA, 0.2, 1));
  REQUIRE(mem.instances(kA).size() == 1);
  CHECK(mem.instances(kA)[0].timestamps == std::vector<std::int64_t>{2});
  CHECK_FALSE(mem.retract(kA, 0.2, 1));
  CHECK_FALSE(mem.retract(kA, 0.3, 2));
  CHECK_FALSE(mem.retract(kB, 0.2, 2));
  CHECK(mem.retract(kA, 0.2, 2));
  CHECK(mem.instances(kA).empty());
}

TEST_CASE("memory agrees with the brute-force evaluator") {
  Rng gen(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    RandomMemory m = random_memory(gen);
    double noise = trial % 5 == 0 ? 0.0 : 0.05 + 0.5 * uniform_open01(gen);
    double decay = 0.1 + 1.5 * uniform_open01(gen);
    std::uint64_t seed = derive_seed(1, trial);
    InstanceMemory mem = build(m, MemoryParams{decay, noise, 0.4}, seed);
    REQUIRE(mem.instances(kA).size() == m.instances.size());

    Rng replay(seed);
    auto probs = mem.retrieval_probs(kA);
    auto expect = oracle::evaluate_ibl(m.instances, m.now, decay, noise, draws(replay, m.instances.size()));
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      CHECK(std::abs(probs[i].second - static_cast<double>(expect.probabilities[i])) < 1e-10);
      total += probs[i].second;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);

    double blend = mem.blended_value(kA);
    auto expect2 = oracle::evaluate_ibl(m.instances, m.now, decay, noise, draws(replay, m.instances.size()));
    CHECK(std::abs(blend - static_cast<double>(expect2.blended)) < 1e-10);
    double lo = m.instances.front().outcome, hi = m.instances.back().outcome;
    CHECK(blend >= lo);
    CHECK(blend <= hi);

    for (std::size_t i = 0; i < m.instances.size(); ++i) {
      double xi = 0.01 + 0.98 * uniform_open01(gen);
      auto ref = oracle::evaluate_ibl({m.instances[i]}, m.now, decay, noise, {xi});
      CHECK(std::abs(mem.activation(mem.instances(kA)[i], xi) - static_cast<double>(ref.activations[0])) < 1e-10);
    }
  }
}

TEST_CASE("recency and frequency without noise") {
  for (double d : {0.05, 0.5, 0.95, 2.0}) {
    for (std::int64_t older = 1; older < 20; older += 3) {
      InstanceMemory mem(noiseless(d), 1);
      for (int i = 0; i < 25; ++i) mem.advance_clock();
      mem.store_at(kA, 0.1, older);
      mem.store_at(kA, 0.2, older + 1);
      auto inst = mem.instances(kA);
      CHECK(mem.activation(inst[1], 0.5) > mem.activation(inst[0], 0.5));
      auto probs = mem.retrieval_probs(kA);
      CHECK(probs[1].second > probs[0].second);

      double before = mem.activation(inst[0], 0.5);
      mem.store_at(kA, 0.1, older + 2);
      CHECK(mem.activation(mem.instances(kA)[0], 0.5) >= before);
    }
  }
}

TEST_CASE("noise-free choice is deterministic across seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    InstanceMemory mem(noiseless(), seed);
    mem.store(kA, 0.3);
    mem.store(kB, 0.31);
    mem.advance_clock();
    std::vector<OptionKey> both{kA, kB};
    CHECK(mem.choose(both) == kB);
  }
}

TEST_CASE("snapshot lists every instance") {
  InstanceMemory mem(noiseless(), 1);
  mem.store(kA, 0.25);
  mem.advance_clock();
  mem.store(kA, 0.25);
  auto j = mem.snapshot();
  REQUIRE(j.size() == 1);
  CHECK(j[0]["action"] == "up");
  CHECK(j[0]["outcome"] == 0.25);
  CHECK(j[0]["timestamps"] == nlohmann::json::array({1, 2}));
}
