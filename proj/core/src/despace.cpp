#include "kupred/despace.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "kupred/errors.hpp"

namespace kupred::de {

ParamDef ParamDef::continuous(std::string name, double lo, double hi,
                              double default_value) {
  ParamDef d;
  d.name = std::move(name);
  d.kind = Kind::Continuous;
  d.lo = lo;
  d.hi = hi;
  d.default_value = default_value;
  d.validate();
  return d;
}

ParamDef ParamDef::categorical(std::string name,
                               std::vector<std::string> categories,
                               std::string default_value) {
  ParamDef d;
  d.name = std::move(name);
  d.kind = Kind::Categorical;
  d.categories = std::move(categories);
  d.default_value = std::move(default_value);
  d.validate();
  return d;
}

bool ParamDef::contains(const ParamValue& v) const {
  if (kind == Kind::Continuous) {
    const double* x = std::get_if<double>(&v);
    return x != nullptr && std::isfinite(*x) && *x >= lo && *x <= hi;
  }
  const std::string* s = std::get_if<std::string>(&v);
  return s != nullptr &&
         std::find(categories.begin(), categories.end(), *s) !=
             categories.end();
}

void ParamDef::validate() const {
  if (name.empty()) throw ConfigError("parameter needs a name");
  if (kind == Kind::Continuous) {
    if (!(lo < hi))
      throw ConfigError("parameter '" + name + "': lo must be < hi");
  } else {
    if (categories.empty())
      throw ConfigError("parameter '" + name + "': empty category list");
    std::set<std::string> uniq(categories.begin(), categories.end());
    if (uniq.size() != categories.size())
      throw ConfigError("parameter '" + name + "': duplicate categories");
  }
  if (!contains(default_value))
    throw ConfigError("parameter '" + name + "': default outside range");
}

void ParamSpace::validate() const {
  if (params.empty()) throw ConfigError("parameter space is empty");
  for (const auto& p : params) p.validate();
}

bool ParamSpace::contains(const std::vector<ParamValue>& values) const {
  if (values.size() != params.size()) return false;
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!params[i].contains(values[i])) return false;
  return true;
}

void DeConfig::validate() const {
  if (population_factor < 4)
    throw ConfigError("population_factor must be >= 4");
  if (!(crossover_prob > 0.0 && crossover_prob <= 1.0))
    throw ConfigError("crossover_prob must be in (0, 1]");
  if (!(diff_weight > 0.0))
    throw ConfigError("diff_weight must be > 0");
  if (max_generations < 0)
    throw ConfigError("max_generations must be >= 0");
}

Candidate sample(const ParamSpace& space, std::mt19937_64& rng) {
  space.validate();
  Candidate c;
  c.values.reserve(space.size());
  for (const auto& p : space.params) {
    if (p.kind == ParamDef::Kind::Continuous) {
      std::uniform_real_distribution<double> dist(p.lo, p.hi);
      c.values.emplace_back(dist(rng));
    } else {
      std::uniform_int_distribution<std::size_t> dist(0,
                                                      p.categories.size() - 1);
      c.values.emplace_back(p.categories[dist(rng)]);
    }
  }
  return c;
}

Candidate mutate(const std::vector<Candidate>& pop, std::size_t target_index,
                 const ParamSpace& space, const DeConfig& cfg,
                 std::mt19937_64& rng) {
  if (pop.size() < 4)
    throw ConfigError("mutate needs a population of at least 4");
  if (target_index >= pop.size())
    throw ArgumentError("target index out of range");

  // Three donors, mutually distinct and distinct from the target.
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  std::size_t a, b, c;
  do { a = pick(rng); } while (a == target_index);
  do { b = pick(rng); } while (b == target_index || b == a);
  do { c = pick(rng); } while (c == target_index || c == a || c == b);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Candidate& target = pop[target_index];
  Candidate m;
  m.values.reserve(space.size());
  for (std::size_t k = 0; k < space.size(); ++k) {
    const ParamDef& p = space.params[k];
    if (unit(rng) >= cfg.crossover_prob) {
      m.values.push_back(target.values[k]);
      continue;
    }
    if (p.kind == ParamDef::Kind::Continuous) {
      double ak = std::get<double>(pop[a].values[k]);
      double bk = std::get<double>(pop[b].values[k]);
      double ck = std::get<double>(pop[c].values[k]);
      double v = ak + cfg.diff_weight * (bk - ck);
      m.values.emplace_back(std::clamp(v, p.lo, p.hi));
    } else {
      std::uniform_int_distribution<int> donor(0, 2);
      std::size_t idx[3] = {a, b, c};
      m.values.push_back(pop[idx[donor(rng)]].values[k]);
    }
  }
  return m;
}

namespace {

double evaluate(const Objective& objective, Candidate& c) {
  double s = objective(c);
  if (!std::isfinite(s)) {
    std::ostringstream msg;
    msg << "objective returned non-finite score for candidate (";
    for (std::size_t i = 0; i < c.values.size(); ++i) {
      if (i) msg << ", ";
      msg << value_to_string(c.values[i]);
    }
    msg << ")";
    throw ArgumentError(msg.str());
  }
  c.score = s;
  return s;
}

}  // namespace

TuneResult tune(const ParamSpace& space, const Objective& objective,
                const DeConfig& cfg) {
  space.validate();
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);

  const std::size_t n = space.size();
  const std::size_t pop_size =
      std::max<std::size_t>(4, static_cast<std::size_t>(cfg.population_factor) * n);

  TuneResult result;
  std::vector<Candidate> pop;
  pop.reserve(pop_size);
  for (std::size_t i = 0; i < pop_size; ++i) {
    Candidate c = sample(space, rng);
    evaluate(objective, c);
    result.trace.push_back(
        {0, static_cast<int>(i), c.values, *c.score});
    pop.push_back(std::move(c));
    ++result.evaluations;
  }

  for (int gen = 1; gen <= cfg.max_generations; ++gen) {
    bool improved_any = false;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      Candidate m = mutate(pop, i, space, cfg, rng);
      evaluate(objective, m);
      ++result.evaluations;
      result.trace.push_back(
          {gen, static_cast<int>(i), m.values, *m.score});
      // Ties keep the mutant, but only strict improvements count as
      // progress for early stopping.
      if (*m.score >= *pop[i].score) {
        improved_any = improved_any || *m.score > *pop[i].score;
        pop[i] = std::move(m);
      }
    }
    result.generations_run = gen;
    if (cfg.early_stop && !improved_any) break;
  }

  auto best = std::max_element(
      pop.begin(), pop.end(),
      [](const Candidate& x, const Candidate& y) { return *x.score < *y.score; });
  result.best = *best;
  return result;
}

GridResult grid_search(const ParamSpace& space, const Objective& objective,
                       int points_per_axis) {
  space.validate();
  if (points_per_axis < 2)
    throw ConfigError("grid_search needs points_per_axis >= 2");

  constexpr std::size_t kMaxEvaluations = 1000000;
  std::size_t total = 1;
  std::vector<std::size_t> axis_sizes;
  for (const auto& p : space.params) {
    std::size_t sz = p.kind == ParamDef::Kind::Continuous
                         ? static_cast<std::size_t>(points_per_axis)
                         : p.categories.size();
    axis_sizes.push_back(sz);
    if (total > kMaxEvaluations / sz)
      throw ConfigError("grid too large (> 1e6 evaluations)");
    total *= sz;
  }

  GridResult result;
  std::vector<std::size_t> idx(space.size(), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Candidate c;
    c.values.reserve(space.size());
    for (std::size_t k = 0; k < space.size(); ++k) {
      const ParamDef& p = space.params[k];
      if (p.kind == ParamDef::Kind::Continuous) {
        double t = static_cast<double>(idx[k]) / (points_per_axis - 1);
        c.values.emplace_back(p.lo + t * (p.hi - p.lo));
      } else {
        c.values.emplace_back(p.categories[idx[k]]);
      }
    }
    evaluate(objective, c);
    ++result.evaluations;
    if (!result.best.score || *c.score > *result.best.score)
      result.best = std::move(c);
    // Odometer increment over the mixed axes.
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (++idx[k] < axis_sizes[k]) break;
      idx[k] = 0;
    }
  }
  return result;
}

std::string value_to_string(const ParamValue& v) {
  if (const double* x = std::get_if<double>(&v)) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", *x);
    return buf;
  }
  return std::get<std::string>(v);
}

void write_trace_csv(std::ostream& out, const ParamSpace& space,
                     const std::vector<TraceRow>& trace) {
  out << "generation,candidate_id";
  for (const auto& p : space.params) out << "," << p.name;
  out << ",score\n";
  for (const auto& row : trace) {
    out << row.generation << "," << row.candidate_id;
    for (const auto& v : row.values) out << "," << value_to_string(v);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", row.score);
    out << "," << buf << "\n";
  }
}

}  // namespace kupred::de
