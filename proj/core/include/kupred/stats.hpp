#pragma once

#include <span>
#include <string>
#include <vector>

namespace kupred::stats {

struct TestResult {
  double statistic = 0.0;   // W+ (sum of positive ranks)
  double p_value = 1.0;     // two-sided
  int n_effective = 0;      // pairs with non-zero difference
  bool degenerate = false;  // all differences zero
  bool exact = false;       // true when p came from full enumeration
};

enum class Magnitude { Negligible, Small, Medium, Large };

struct EffectSize {
  double delta = 0.0;  // in [-1, 1]
  Magnitude magnitude = Magnitude::Negligible;
};

std::string to_string(Magnitude m);

// Paired two-sided test. Exact enumeration of all sign assignments for
// n_effective <= exact_cutoff, tie-corrected normal approximation above.
TestResult wilcoxon_signed_rank(std::span<const double> x,
                                std::span<const double> y,
                                int exact_cutoff = 12);

// Benjamini-Hochberg step-up adjustment, returned in input order.
std::vector<double> bh_adjust(std::span<const double> p_values);

// Romano thresholds; boundary values assign to the larger magnitude.
Magnitude magnitude_of(double delta);

EffectSize cliffs_delta(std::span<const double> x, std::span<const double> y);

}  // namespace kupred::stats
