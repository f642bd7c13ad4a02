#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include "kupred/despace.hpp"
#include "kupred/errors.hpp"

using namespace kupred;
using de::Candidate;
using de::ParamDef;
using de::ParamSpace;

namespace {

ParamSpace table2_space() {
  ParamSpace space;
  space.params.push_back(ParamDef::continuous("C", 1.0, 50.0, 1.0));
  space.params.push_back(ParamDef::categorical(
      "kernel", {"linear", "poly", "rbf", "sigmoid"}, "rbf"));
  space.params.push_back(ParamDef::continuous("gamma", 0.0, 1.0, 0.005));
  space.params.push_back(ParamDef::continuous("coef0", 0.0, 1.0, 0.0));
  return space;
}

de::Objective quadratic_c = [](const Candidate& c) {
  double v = std::get<double>(c.values[0]);
  return -(v - 25.0) * (v - 25.0);
};

}  // namespace

TEST_CASE("ParamDef validation") {
  CHECK_THROWS_AS(ParamDef::continuous("x", 2.0, 1.0, 1.5), ConfigError);
  CHECK_THROWS_AS(ParamDef::continuous("x", 0.0, 1.0, 2.0), ConfigError);
  CHECK_THROWS_AS(ParamDef::categorical("k", {}, "a"), ConfigError);
  CHECK_THROWS_AS(ParamDef::categorical("k", {"a", "a"}, "a"), ConfigError);
  CHECK_THROWS_AS(ParamDef::categorical("k", {"a", "b"}, "c"), ConfigError);
}

TEST_CASE("sample: single-member category is forced") {
  ParamSpace space;
  space.params.push_back(ParamDef::categorical("kernel", {"rbf"}, "rbf"));
  std::mt19937_64 rng(1);
  Candidate c = de::sample(space, rng);
  CHECK(std::get<std::string>(c.values[0]) == "rbf");
  CHECK_FALSE(c.score.has_value());
}

TEST_CASE("sample: empty space is a configuration error") {
  ParamSpace space;
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(de::sample(space, rng), ConfigError);
}

TEST_CASE("sample: all values stay inside the declared ranges") {
  ParamSpace space = table2_space();
  std::mt19937_64 rng(42);
  for (int i = 0; i < 500; ++i) {
    Candidate c = de::sample(space, rng);
    CHECK(space.contains(c.values));
  }
}

TEST_CASE("sample: empirical mean of C over [1,50] near 25.5") {
  ParamSpace space;
  space.params.push_back(ParamDef::continuous("C", 1.0, 50.0, 1.0));
  std::mt19937_64 rng(7);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i)
    sum += std::get<double>(de::sample(space, rng).values[0]);
  CHECK(sum / n == doctest::Approx(25.5).epsilon(0).scale(0).epsilon(1.0));
  CHECK(std::abs(sum / n - 25.5) < 1.0);
}

TEST_CASE("mutate: p1 = 0-like behavior via tiny crossover") {
  // crossover_prob must be > 0; probability ~0 means the mutant copies
  // the target on every decision with overwhelming probability.
  ParamSpace space = table2_space();
  de::DeConfig cfg;
  cfg.crossover_prob = 1e-12;
  std::mt19937_64 rng(3);
  std::vector<Candidate> pop;
  for (int i = 0; i < 6; ++i) pop.push_back(de::sample(space, rng));
  Candidate m = de::mutate(pop, 2, space, cfg, rng);
  CHECK(m.values == pop[2].values);
}

TEST_CASE("mutate: degenerate constant population is a fixed point") {
  ParamSpace space;
  space.params.push_back(ParamDef::continuous("C", 1.0, 50.0, 10.0));
  Candidate constant;
  constant.values = {de::ParamValue(10.0)};
  std::vector<Candidate> pop(6, constant);
  de::DeConfig cfg;
  cfg.crossover_prob = 1.0;
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Candidate m = de::mutate(pop, 0, space, cfg, rng);
    CHECK(std::get<double>(m.values[0]) == doctest::Approx(10.0));
  }
}

TEST_CASE("mutate: population below 4 rejected") {
  ParamSpace space = table2_space();
  std::mt19937_64 rng(5);
  std::vector<Candidate> pop{de::sample(space, rng), de::sample(space, rng),
                             de::sample(space, rng)};
  de::DeConfig cfg;
  CHECK_THROWS_AS(de::mutate(pop, 0, space, cfg, rng), ConfigError);
}

TEST_CASE("mutate: results are clamped to the range") {
  ParamSpace space;
  space.params.push_back(ParamDef::continuous("C", 1.0, 50.0, 1.0));
  de::DeConfig cfg;
  cfg.crossover_prob = 1.0;
  cfg.diff_weight = 10.0;  // exaggerate to force out-of-range extrapolation
  std::mt19937_64 rng(6);
  std::vector<Candidate> pop;
  for (int i = 0; i < 8; ++i) pop.push_back(de::sample(space, rng));
  for (int trial = 0; trial < 100; ++trial) {
    Candidate m = de::mutate(pop, trial % pop.size(), space, cfg, rng);
    double v = std::get<double>(m.values[0]);
    CHECK(v >= 1.0);
    CHECK(v <= 50.0);
  }
}

TEST_CASE("tune: constant objective early-stops after one generation") {
  ParamSpace space = table2_space();
  de::DeConfig cfg;
  cfg.seed = 11;
  cfg.max_generations = 10;
  de::TuneResult result = de::tune(
      space, [](const Candidate&) { return 0.5; }, cfg);
  CHECK(*result.best.score == doctest::Approx(0.5));
  CHECK(result.generations_run == 1);
}

TEST_CASE("tune: quadratic objective converges to C = 25") {
  ParamSpace space;
  space.params.push_back(ParamDef::continuous("C", 1.0, 50.0, 1.0));
  de::DeConfig cfg;
  cfg.population_factor = 20;
  cfg.max_generations = 10;
  cfg.seed = 17;
  de::TuneResult result = de::tune(space, quadratic_c, cfg);
  CHECK(std::abs(std::get<double>(result.best.values[0]) - 25.0) < 0.5);
}

TEST_CASE("tune: mixed categorical/continuous optimum found") {
  ParamSpace space;
  space.params.push_back(ParamDef::categorical(
      "kernel", {"linear", "poly", "rbf", "sigmoid"}, "rbf"));
  space.params.push_back(ParamDef::continuous("C", 1.0, 50.0, 1.0));
  de::Objective objective = [](const Candidate& c) {
    double bonus = std::get<std::string>(c.values[0]) == "rbf" ? 1.0 : 0.0;
    double v = std::get<double>(c.values[1]);
    return bonus - (v - 25.0) * (v - 25.0) / 625.0;
  };
  de::DeConfig cfg;
  cfg.population_factor = 10;
  cfg.max_generations = 10;
  cfg.seed = 23;
  de::TuneResult result = de::tune(space, objective, cfg);
  CHECK(std::get<std::string>(result.best.values[0]) == "rbf");
  CHECK(std::abs(std::get<double>(result.best.values[1]) - 25.0) < 1.0);
}

TEST_CASE("tune: deterministic given the seed, evaluations bounded") {
  ParamSpace space = table2_space();
  de::DeConfig cfg;
  cfg.population_factor = 5;
  cfg.max_generations = 4;
  cfg.seed = 99;
  cfg.early_stop = false;
  de::Objective objective = [](const Candidate& c) {
    return -std::abs(std::get<double>(c.values[0]) - 30.0) +
           std::get<double>(c.values[2]);
  };
  de::TuneResult a = de::tune(space, objective, cfg);
  de::TuneResult b = de::tune(space, objective, cfg);
  CHECK(a.best.values == b.best.values);
  CHECK(*a.best.score == *b.best.score);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].values == b.trace[i].values);
    CHECK(a.trace[i].score == b.trace[i].score);
  }
  const std::size_t n = space.size();
  CHECK(a.evaluations <=
        n * 5 * (1 + static_cast<std::size_t>(cfg.max_generations)));
}

TEST_CASE("tune: best trace score is monotonically non-decreasing") {
  ParamSpace space = table2_space();
  de::DeConfig cfg;
  cfg.seed = 31;
  cfg.max_generations = 8;
  de::TuneResult result = de::tune(space, quadratic_c, cfg);
  double best = -1e300;
  int last_gen = 0;
  double best_at_gen = -1e300;
  for (const auto& row : result.trace) {
    if (row.generation != last_gen) {
      CHECK(best_at_gen >= best - 1e-12);
      best = std::max(best, best_at_gen);
      last_gen = row.generation;
    }
    best_at_gen = std::max(best_at_gen, row.score);
  }
}

TEST_CASE("tune: objective failure carries candidate context") {
  ParamSpace space = table2_space();
  de::DeConfig cfg;
  cfg.seed = 1;
  CHECK_THROWS_WITH_AS(
      de::tune(space,
               [](const Candidate&) {
                 return std::numeric_limits<double>::quiet_NaN();
               },
               cfg),
      doctest::Contains("candidate"), ArgumentError);
}

TEST_CASE("grid_search: even discretization includes endpoints") {
  ParamSpace space;
  space.params.push_back(ParamDef::continuous("x", 0.0, 1.0, 0.0));
  std::vector<double> seen;
  de::grid_search(space,
                  [&](const Candidate& c) {
                    seen.push_back(std::get<double>(c.values[0]));
                    return 0.0;
                  },
                  3);
  REQUIRE(seen.size() == 3);
  CHECK(seen[0] == doctest::Approx(0.0));
  CHECK(seen[1] == doctest::Approx(0.5));
  CHECK(seen[2] == doctest::Approx(1.0));
}

TEST_CASE("grid_search: 5-point grid over C picks 25.5") {
  ParamSpace space;
  space.params.push_back(ParamDef::continuous("C", 1.0, 50.0, 1.0));
  de::GridResult result = de::grid_search(space, quadratic_c, 5);
  CHECK(std::get<double>(result.best.values[0]) == doctest::Approx(25.5));
  CHECK(result.evaluations == 5);
}

TEST_CASE("grid_search: Cartesian count over the 4-parameter space") {
  ParamSpace space = table2_space();
  de::GridResult result =
      de::grid_search(space, [](const Candidate&) { return 0.0; }, 4);
  CHECK(result.evaluations == 4 * 4 * 4 * 4);
}

TEST_CASE("grid_search: overflow guard") {
  ParamSpace space;
  for (int i = 0; i < 8; ++i)
    space.params.push_back(
        ParamDef::continuous("p" + std::to_string(i), 0.0, 1.0, 0.0));
  CHECK_THROWS_AS(
      de::grid_search(space, [](const Candidate&) { return 0.0; }, 10),
      ConfigError);
}

TEST_CASE("DE beats equal-budget grid search on the quadratic (property)") {
  ParamSpace space;
  space.params.push_back(ParamDef::continuous("x", 1.0, 50.0, 1.0));
  space.params.push_back(ParamDef::continuous("y", 0.0, 1.0, 0.0));
  de::Objective objective = [](const Candidate& c) {
    double x = std::get<double>(c.values[0]);
    double y = std::get<double>(c.values[1]);
    return -(x - 25.0) * (x - 25.0) - 100.0 * (y - 0.37) * (y - 0.37);
  };
  de::GridResult grid = de::grid_search(space, objective, 6);  // 36 evals
  int wins = 0;
  for (int seed = 0; seed < 20; ++seed) {
    de::DeConfig cfg;
    cfg.population_factor = 6;  // N = 12, budget 12 * (1 + 2) = 36
    cfg.max_generations = 2;
    cfg.early_stop = false;
    cfg.seed = static_cast<std::uint64_t>(seed);
    de::TuneResult result = de::tune(space, objective, cfg);
    CHECK(result.evaluations <= grid.evaluations);
    if (*result.best.score >= *grid.best.score) ++wins;
  }
  CHECK(wins >= 16);
}

TEST_CASE("trace CSV has header and one row per evaluation") {
  ParamSpace space = table2_space();
  de::DeConfig cfg;
  cfg.seed = 2;
  cfg.max_generations = 2;
  cfg.early_stop = false;
  de::TuneResult result = de::tune(space, quadratic_c, cfg);
  std::ostringstream out;
  de::write_trace_csv(out, space, result.trace);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "generation,candidate_id,C,kernel,gamma,coef0,score");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == result.trace.size());
}
