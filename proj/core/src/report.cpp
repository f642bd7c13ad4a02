#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "kupred/errors.hpp"
#include "kupred/runner.hpp"

#include <json.hpp>

namespace kupred::run {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

nlohmann::json report_to_json(const metrics::MetricsReport& r) {
  nlohmann::json j;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["accuracy"] = r.accuracy;
  j["overall_precision"] = r.overall_precision;
  j["overall_recall"] = r.overall_recall;
  j["overall_f1"] = r.overall_f1;
  j["zero_denominator_hit"] = r.zero_denominator_hit;
  return j;
}

metrics::MetricsReport report_from_json(const nlohmann::json& j) {
  metrics::MetricsReport r;
  r.precision = j.at("precision").get<std::vector<double>>();
  r.recall = j.at("recall").get<std::vector<double>>();
  r.f1 = j.at("f1").get<std::vector<double>>();
  r.accuracy = j.at("accuracy").get<double>();
  r.overall_precision = j.at("overall_precision").get<double>();
  r.overall_recall = j.at("overall_recall").get<double>();
  r.overall_f1 = j.at("overall_f1").get<double>();
  r.zero_denominator_hit = j.value("zero_denominator_hit", false);
  return r;
}

nlohmann::json candidate_to_json(const de::Candidate& c) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& v : c.values) {
    if (const double* x = std::get_if<double>(&v))
      values.push_back(*x);
    else
      values.push_back(std::get<std::string>(v));
  }
  nlohmann::json j;
  j["values"] = std::move(values);
  if (c.score) j["score"] = *c.score;
  return j;
}

de::Candidate candidate_from_json(const nlohmann::json& j) {
  de::Candidate c;
  for (const auto& v : j.at("values")) {
    if (v.is_number())
      c.values.emplace_back(v.get<double>());
    else
      c.values.emplace_back(v.get<std::string>());
  }
  if (j.contains("score")) c.score = j["score"].get<double>();
  return c;
}

}  // namespace

void save_run_output(const RunOutput& run, std::ostream& out) {
  nlohmann::json j;
  j["method"] = run.method;
  j["total_seconds"] = run.total_seconds;
  j["aggregate"] = report_to_json(run.aggregate);
  j["records"] = nlohmann::json::array();
  for (const auto& rec : run.records) {
    nlohmann::json jr;
    jr["fold"] = rec.fold;
    jr["repeat"] = rec.repeat;
    if (rec.chosen) jr["chosen"] = candidate_to_json(*rec.chosen);
    jr["tune_f1"] = rec.tune_f1;
    jr["test_report"] = report_to_json(rec.test_report);
    jr["tune_seconds"] = rec.tune_seconds;
    jr["train_seconds"] = rec.train_seconds;
    jr["test_seconds"] = rec.test_seconds;
    j["records"].push_back(std::move(jr));
  }
  out << j.dump(1) << "\n";
}

RunOutput load_run_output(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("run output file: ") + e.what());
  }
  RunOutput run;
  run.method = j.at("method").get<std::string>();
  run.total_seconds = j.value("total_seconds", 0.0);
  run.aggregate = report_from_json(j.at("aggregate"));
  for (const auto& jr : j.at("records")) {
    RunRecord rec;
    rec.fold = jr.at("fold").get<int>();
    rec.repeat = jr.value("repeat", 0);
    if (jr.contains("chosen")) rec.chosen = candidate_from_json(jr["chosen"]);
    rec.tune_f1 = jr.value("tune_f1", 0.0);
    rec.test_report = report_from_json(jr.at("test_report"));
    rec.tune_seconds = jr.value("tune_seconds", 0.0);
    rec.train_seconds = jr.value("train_seconds", 0.0);
    rec.test_seconds = jr.value("test_seconds", 0.0);
    run.records.push_back(std::move(rec));
  }
  return run;
}

void write_comparison_csv(std::ostream& out, const ComparisonReport& report) {
  out << "metric,class,mean_a,mean_b,delta,p_value,adjusted_p,cliffs_delta,"
         "magnitude\n";
  for (const auto& e : report.entries) {
    out << e.metric << "," << e.cls << "," << fmt(e.mean_a) << ","
        << fmt(e.mean_b) << "," << fmt(e.delta) << ",";
    if (e.test)
      out << fmt(e.test->p_value) << "," << fmt(e.adjusted_p);
    else
      out << "na,na";
    out << ",";
    if (e.effect)
      out << fmt(e.effect->delta) << "," << stats::to_string(e.effect->magnitude);
    else
      out << "na,na";
    out << "\n";
  }
}

void write_comparison_table(std::ostream& out,
                            const ComparisonReport& report) {
  out << "Comparison: " << report.method_a << " vs " << report.method_b
      << "\n";
  if (!report.note.empty()) out << "note: " << report.note << "\n";
  out << std::left << std::setw(12) << "Metric" << std::setw(16) << "Class"
      << std::setw(10) << report.method_a.substr(0, 9) << std::setw(10)
      << report.method_b.substr(0, 9) << std::setw(10) << "Delta"
      << std::setw(12) << "adj. p" << std::setw(10) << "delta_es"
      << "Magnitude\n";
  auto cell = [](double x) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.3f", x);
    return std::string(buf);
  };
  for (const auto& e : report.entries) {
    out << std::left << std::setw(12) << e.metric << std::setw(16) << e.cls
        << std::setw(10) << cell(e.mean_a) << std::setw(10) << cell(e.mean_b)
        << std::setw(10) << cell(e.delta);
    if (e.test)
      out << std::setw(12) << cell(e.adjusted_p);
    else
      out << std::setw(12) << "na";
    if (e.effect)
      out << std::setw(10) << cell(e.effect->delta)
          << stats::to_string(e.effect->magnitude);
    else
      out << std::setw(10) << "na" << "na";
    out << "\n";
  }
}

void emit_report(const RunOutput& run,
                 const std::vector<ComparisonReport>& comparisons,
                 const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir);
  fs::path dir(out_dir);

  const auto names = data::class_names();
  {
    auto out = open_out(dir / "metrics.csv");
    metrics::write_report_csv(out, run.aggregate, names);
  }
  {
    auto out = open_out(dir / "metrics_table.txt");
    out << "Aggregate over " << run.records.size() << " runs (" << run.method
        << ")\n\n";
    metrics::write_report_table(out, run.aggregate, names);
  }
  {
    auto out = open_out(dir / "run_records.json");
    // Timings live in timings.txt; strip them here so the record file is
    // reproducible byte for byte across runs.
    RunOutput stripped = run;
    stripped.total_seconds = 0.0;
    for (auto& rec : stripped.records)
      rec.tune_seconds = rec.train_seconds = rec.test_seconds = 0.0;
    save_run_output(stripped, out);
  }
  {
    auto out = open_out(dir / "timings.txt");
    double tune = 0.0, train = 0.0, test = 0.0;
    for (const auto& rec : run.records) {
      tune += rec.tune_seconds;
      train += rec.train_seconds;
      test += rec.test_seconds;
    }
    out << "phase,seconds\n";
    out << "tuning," << fmt(tune) << "\n";
    out << "final_training," << fmt(train) << "\n";
    out << "testing," << fmt(test) << "\n";
    out << "total," << fmt(run.total_seconds) << "\n";
  }

  for (std::size_t i = 0; i < comparisons.size(); ++i) {
    const auto& cmp = comparisons[i];
    std::string stem = "delta_" + cmp.method_a + "_vs_" + cmp.method_b;
    {
      auto out = open_out(dir / (stem + ".csv"));
      write_comparison_csv(out, cmp);
    }
    {
      auto out = open_out(dir / (stem + ".txt"));
      write_comparison_table(out, cmp);
    }
    if (cmp.total_seconds_a > 0.0 && cmp.total_seconds_b > 0.0) {
      auto out = open_out(dir / (stem + "_speedup.txt"));
      double ratio = cmp.total_seconds_b / cmp.total_seconds_a;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.1f", ratio);
      out << cmp.method_a << ": " << fmt(cmp.total_seconds_a) << " s\n"
          << cmp.method_b << ": " << fmt(cmp.total_seconds_b) << " s\n"
          << "speedup: " << buf << "X\n";
    }
  }
}

}  // namespace kupred::run
