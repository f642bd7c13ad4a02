#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kupred/data.hpp"
#include "kupred/despace.hpp"
#include "kupred/embed.hpp"
#include "kupred/metrics.hpp"
#include "kupred/stats.hpp"
#include "kupred/svm.hpp"

namespace kupred::run {

struct ExperimentConfig {
  std::string dataset_path;    // pair JSONL with train/test split tags
  std::string units_path;      // unit texts, needed when featurizing
  std::string embedding_path;  // pretrained word2vec text model
  bool train_embedding = false;  // train from units when no model given
  embed::SkipGramConfig embed_cfg;
  embed::PairMode pair_mode = embed::PairMode::Add;
  de::DeConfig de_cfg;
  svm::SvmParams svm_defaults;
  bool gamma_auto = true;  // defaults use gamma = 1/n_features
  svm::SmoConfig smo;
  int folds = 10;
  int repeats = 1;
  std::uint64_t seed = 42;
  std::string out_dir = "out";

  void validate() const;
};

// Documented key-value text format, '#' comments.
ExperimentConfig load_config(std::istream& in);
ExperimentConfig load_config_file(const std::string& path);

// The Table-2 search space over (C, kernel, gamma, coef0).
de::ParamSpace svm_param_space(int n_features);
svm::SvmParams params_from_candidate(const de::Candidate& candidate,
                                     const svm::SvmParams& base);

struct FoldSplit {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> tune_indices;
};

// Stratified-by-class folds over the indices of the "train" split.
std::vector<FoldSplit> split_folds(const data::KuPairDataset& dataset,
                                   int folds, std::uint64_t seed);

struct RunRecord {
  int fold = 0;
  int repeat = 0;
  std::optional<de::Candidate> chosen;  // absent for untuned runs
  double tune_f1 = 0.0;
  metrics::MetricsReport test_report;
  double tune_seconds = 0.0;
  double train_seconds = 0.0;
  double test_seconds = 0.0;
  std::vector<de::TraceRow> trace;
};

struct RunOutput {
  std::string method;  // "tuned" or "untuned"
  std::vector<RunRecord> records;
  metrics::MetricsReport aggregate;  // mean over records
  double total_seconds = 0.0;
};

RunOutput run_tuned(const ExperimentConfig& cfg,
                    const data::KuPairDataset& featurized);
RunOutput run_untuned(const ExperimentConfig& cfg,
                      const data::KuPairDataset& featurized);

// Per-run score distributions keyed by metric then class name
// ("overall" included). Published tables carry single values.
struct ScoreSet {
  std::string name;
  bool has_distributions = false;
  double total_seconds = 0.0;
  std::map<std::string, std::map<std::string, std::vector<double>>> values;

  static ScoreSet from_run(const RunOutput& run,
                           const std::vector<std::string>& class_names);
  // CSV: metric,class,value (with a header line).
  static ScoreSet from_published_csv(std::istream& in, std::string name);
};

struct ComparisonEntry {
  std::string metric;
  std::string cls;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double delta = 0.0;  // mean_a - mean_b
  std::optional<stats::TestResult> test;
  double adjusted_p = 1.0;
  std::optional<stats::EffectSize> effect;
};

struct ComparisonReport {
  std::string method_a;
  std::string method_b;
  double total_seconds_a = 0.0;
  double total_seconds_b = 0.0;
  bool stats_available = false;
  std::string note;
  std::vector<ComparisonEntry> entries;
};

ComparisonReport compare(const ScoreSet& a, const ScoreSet& b);

// Report bundle: metrics CSV, aligned text tables, delta chart data, and
// a timing summary (timings go to their own file since wall clock is not
// deterministic).
void emit_report(const RunOutput& run,
                 const std::vector<ComparisonReport>& comparisons,
                 const std::string& out_dir);

void write_comparison_csv(std::ostream& out, const ComparisonReport& report);
void write_comparison_table(std::ostream& out, const ComparisonReport& report);

void save_run_output(const RunOutput& run, std::ostream& out);
RunOutput load_run_output(std::istream& in);

}  // namespace kupred::run
