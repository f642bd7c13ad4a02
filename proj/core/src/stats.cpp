#include "kupred/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "kupred/errors.hpp"

namespace kupred::stats {

std::string to_string(Magnitude m) {
  switch (m) {
    case Magnitude::Negligible: return "negligible";
    case Magnitude::Small: return "small";
    case Magnitude::Medium: return "medium";
    case Magnitude::Large: return "large";
  }
  return "?";
}

namespace {

constexpr double kRankEps = 1e-9;

// Ranks of |d| with average ranks for ties.
std::vector<double> tied_ranks(const std::vector<double>& abs_d) {
  const std::size_t n = abs_d.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return abs_d[a] < abs_d[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n &&
           std::abs(abs_d[order[j + 1]] - abs_d[order[i]]) <= kRankEps)
      ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

TestResult wilcoxon_signed_rank(std::span<const double> x,
                                std::span<const double> y, int exact_cutoff) {
  if (x.size() != y.size())
    throw ArgumentError("wilcoxon: paired samples differ in length");
  if (x.empty()) throw ArgumentError("wilcoxon: empty samples");

  std::vector<double> abs_d;
  std::vector<int> signs;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    if (d == 0.0) continue;
    abs_d.push_back(std::abs(d));
    signs.push_back(d > 0 ? 1 : -1);
  }

  TestResult result;
  result.n_effective = static_cast<int>(abs_d.size());
  if (abs_d.empty()) {
    result.degenerate = true;
    result.p_value = 1.0;
    return result;
  }

  std::vector<double> ranks = tied_ranks(abs_d);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i)
    if (signs[i] > 0) w_plus += ranks[i];
  result.statistic = w_plus;

  const int n = result.n_effective;
  if (n <= exact_cutoff) {
    // Exact: every sign assignment equally likely under H0.
    const std::uint64_t assignments = std::uint64_t{1} << n;
    std::uint64_t le = 0, ge = 0;
    for (std::uint64_t mask = 0; mask < assignments; ++mask) {
      double w = 0.0;
      for (int i = 0; i < n; ++i)
        if (mask & (std::uint64_t{1} << i)) w += ranks[std::size_t(i)];
      if (w <= w_plus + kRankEps) ++le;
      if (w >= w_plus - kRankEps) ++ge;
    }
    double total = static_cast<double>(assignments);
    result.p_value =
        std::min(1.0, 2.0 * std::min(le / total, ge / total));
    result.exact = true;
  } else {
    // Normal approximation; Var(W+) = sum r_i^2 / 4 absorbs ties.
    double mean = 0.0, var = 0.0;
    for (double r : ranks) {
      mean += r / 2.0;
      var += r * r / 4.0;
    }
    double sd = std::sqrt(var);
    double z = (std::abs(w_plus - mean) - 0.5) / sd;  // continuity corrected
    if (z < 0.0) z = 0.0;
    result.p_value = std::min(1.0, 2.0 * normal_sf(z));
  }
  return result;
}

std::vector<double> bh_adjust(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0))
      throw ArgumentError("bh_adjust: p-value outside [0, 1]");

  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p_values[a] < p_values[b];
  });

  std::vector<double> adjusted(m);
  double running_min = 1.0;
  for (std::size_t r = m; r > 0; --r) {
    std::size_t idx = order[r - 1];
    double scaled = p_values[idx] * static_cast<double>(m) /
                    static_cast<double>(r);
    running_min = std::min(running_min, std::min(scaled, 1.0));
    adjusted[idx] = running_min;
  }
  return adjusted;
}

Magnitude magnitude_of(double delta) {
  double a = std::abs(delta);
  if (a >= 0.474) return Magnitude::Large;
  if (a >= 0.33) return Magnitude::Medium;
  if (a >= 0.147) return Magnitude::Small;
  return Magnitude::Negligible;
}

EffectSize cliffs_delta(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty())
    throw ArgumentError("cliffs_delta: empty sample");
  std::int64_t greater = 0, less = 0;
  for (double xi : x) {
    for (double yj : y) {
      if (xi > yj)
        ++greater;
      else if (xi < yj)
        ++less;
    }
  }
  EffectSize e;
  e.delta = static_cast<double>(greater - less) /
            (static_cast<double>(x.size()) * static_cast<double>(y.size()));
  e.magnitude = magnitude_of(e.delta);
  return e;
}

}  // namespace kupred::stats
