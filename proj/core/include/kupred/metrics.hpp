#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace kupred::metrics {

struct ConfusionMatrix {
  int k = 0;
  // Row = actual class, column = predicted class.
  std::vector<std::int64_t> counts;

  explicit ConfusionMatrix(int k_ = 0) : k(k_), counts(std::size_t(k_) * k_, 0) {}
  std::int64_t& at(int actual, int predicted) {
    return counts[std::size_t(actual) * k + predicted];
  }
  std::int64_t at(int actual, int predicted) const {
    return counts[std::size_t(actual) * k + predicted];
  }
  std::int64_t total() const;
};

struct MetricsReport {
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  std::vector<double> f1;
  double accuracy = 0.0;
  double overall_precision = 0.0;  // macro averages
  double overall_recall = 0.0;
  double overall_f1 = 0.0;
  bool zero_denominator_hit = false;
};

ConfusionMatrix confusion(std::span<const int> actual,
                          std::span<const int> predicted, int k);

MetricsReport score(const ConfusionMatrix& cm);

// Unweighted arithmetic mean; the "overall" columns use exactly this.
double macro_average(std::span<const double> per_class);

void write_report_csv(std::ostream& out, const MetricsReport& report,
                      const std::vector<std::string>& class_names);
void write_report_table(std::ostream& out, const MetricsReport& report,
                        const std::vector<std::string>& class_names);

}  // namespace kupred::metrics
