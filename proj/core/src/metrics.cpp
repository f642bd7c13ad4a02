#include "kupred/metrics.hpp"

#include <cstdio>
#include <iomanip>
#include <numeric>

#include "kupred/errors.hpp"

namespace kupred::metrics {

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

ConfusionMatrix confusion(std::span<const int> actual,
                          std::span<const int> predicted, int k) {
  if (actual.size() != predicted.size())
    throw ArgumentError("confusion: label sequences differ in length");
  if (k < 1) throw ArgumentError("confusion: k must be >= 1");
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] < 0 || actual[i] >= k || predicted[i] < 0 ||
        predicted[i] >= k)
      throw ArgumentError("confusion: label out of range at index " +
                          std::to_string(i));
    ++cm.at(actual[i], predicted[i]);
  }
  return cm;
}

double macro_average(std::span<const double> per_class) {
  if (per_class.empty()) throw ArgumentError("macro_average: empty input");
  return std::accumulate(per_class.begin(), per_class.end(), 0.0) /
         static_cast<double>(per_class.size());
}

MetricsReport score(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ArgumentError("score: empty confusion matrix");
  MetricsReport r;
  std::int64_t diag = 0;
  for (int j = 0; j < cm.k; ++j) {
    std::int64_t col = 0, row = 0;
    for (int i = 0; i < cm.k; ++i) {
      col += cm.at(i, j);  // predicted as j
      row += cm.at(j, i);  // actually j
    }
    diag += cm.at(j, j);
    double prec = 0.0, rec = 0.0;
    if (col > 0)
      prec = static_cast<double>(cm.at(j, j)) / static_cast<double>(col);
    else
      r.zero_denominator_hit = true;
    if (row > 0)
      rec = static_cast<double>(cm.at(j, j)) / static_cast<double>(row);
    else
      r.zero_denominator_hit = true;
    double f1 = 0.0;
    if (prec + rec > 0.0) f1 = 2.0 * prec * rec / (prec + rec);
    r.precision.push_back(prec);
    r.recall.push_back(rec);
    r.f1.push_back(f1);
  }
  r.accuracy = static_cast<double>(diag) / static_cast<double>(cm.total());
  r.overall_precision = macro_average(r.precision);
  r.overall_recall = macro_average(r.recall);
  r.overall_f1 = macro_average(r.f1);
  return r;
}

namespace {
std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}
}  // namespace

void write_report_csv(std::ostream& out, const MetricsReport& report,
                      const std::vector<std::string>& class_names) {
  out << "class,precision,recall,f1,accuracy\n";
  for (std::size_t j = 0; j < report.precision.size(); ++j) {
    const std::string name =
        j < class_names.size() ? class_names[j] : "class" + std::to_string(j);
    out << name << "," << fmt(report.precision[j]) << ","
        << fmt(report.recall[j]) << "," << fmt(report.f1[j]) << ",\n";
  }
  out << "overall," << fmt(report.overall_precision) << ","
      << fmt(report.overall_recall) << "," << fmt(report.overall_f1) << ","
      << fmt(report.accuracy) << "\n";
}

void write_report_table(std::ostream& out, const MetricsReport& report,
                        const std::vector<std::string>& class_names) {
  auto cell = [](double x) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.3f", x);
    return std::string(buf);
  };
  out << std::left << std::setw(14) << "Metric";
  for (std::size_t j = 0; j < report.precision.size(); ++j)
    out << std::setw(14)
        << (j < class_names.size() ? class_names[j]
                                   : "class" + std::to_string(j));
  out << std::setw(14) << "Overall" << "\n";
  auto row = [&](const char* name, const std::vector<double>& vals,
                 double overall) {
    out << std::left << std::setw(14) << name;
    for (double v : vals) out << std::setw(14) << cell(v);
    out << std::setw(14) << cell(overall) << "\n";
  };
  row("Precision", report.precision, report.overall_precision);
  row("Recall", report.recall, report.overall_recall);
  row("F1-score", report.f1, report.overall_f1);
  out << std::left << std::setw(14) << "Accuracy";
  for (std::size_t j = 0; j < report.precision.size(); ++j)
    out << std::setw(14) << "-";
  out << std::setw(14) << cell(report.accuracy) << "\n";
}

}  // namespace kupred::metrics
