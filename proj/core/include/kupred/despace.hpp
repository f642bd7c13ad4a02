#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace kupred::de {

// A tunable decision: either a real interval or an ordered category list.
using ParamValue = std::variant<double, std::string>;

struct ParamDef {
  enum class Kind { Continuous, Categorical };

  std::string name;
  Kind kind = Kind::Continuous;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::string> categories;
  ParamValue default_value;

  static ParamDef continuous(std::string name, double lo, double hi,
                             double default_value);
  static ParamDef categorical(std::string name,
                              std::vector<std::string> categories,
                              std::string default_value);

  bool contains(const ParamValue& v) const;
  void validate() const;
};

struct ParamSpace {
  std::vector<ParamDef> params;

  std::size_t size() const { return params.size(); }
  bool empty() const { return params.empty(); }
  void validate() const;
  bool contains(const std::vector<ParamValue>& values) const;
};

struct Candidate {
  std::vector<ParamValue> values;
  std::optional<double> score;
};

struct DeConfig {
  int population_factor = 10;     // population N = factor * n decisions
  double crossover_prob = 0.75;   // p1, per-decision
  double diff_weight = 0.75;      // f
  int max_generations = 10;
  std::uint64_t seed = 1;
  bool early_stop = true;         // stop after a full pass with no replacement

  void validate() const;
};

// Higher is better. Must be deterministic given (candidate, seed).
using Objective = std::function<double(const Candidate&)>;

struct TraceRow {
  int generation = 0;   // 0 = initial population
  int candidate_id = 0;
  std::vector<ParamValue> values;
  double score = 0.0;
};

struct TuneResult {
  Candidate best;
  std::vector<TraceRow> trace;
  std::size_t evaluations = 0;
  int generations_run = 0;
};

struct GridResult {
  Candidate best;
  std::size_t evaluations = 0;
};

Candidate sample(const ParamSpace& space, std::mt19937_64& rng);

// DE/rand/1/bin for continuous decisions, uniform donor pick for categorical.
Candidate mutate(const std::vector<Candidate>& pop, std::size_t target_index,
                 const ParamSpace& space, const DeConfig& cfg,
                 std::mt19937_64& rng);

// Steady-state differential evolution, maximizing the objective.
TuneResult tune(const ParamSpace& space, const Objective& objective,
                const DeConfig& cfg);

// Full Cartesian grid baseline; continuous axes discretized evenly
// including endpoints, categorical axes enumerate all values.
GridResult grid_search(const ParamSpace& space, const Objective& objective,
                       int points_per_axis);

std::string value_to_string(const ParamValue& v);
void write_trace_csv(std::ostream& out, const ParamSpace& space,
                     const std::vector<TraceRow>& trace);

}  // namespace kupred::de
