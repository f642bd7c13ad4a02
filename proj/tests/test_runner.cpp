#include <array>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <doctest.h>

#include "kupred/errors.hpp"
#include "kupred/runner.hpp"

using namespace kupred;
namespace fs = std::filesystem;

namespace {

// Featurized 4-class dataset with well-separated blob features, bypassing
// embedding training so runner tests stay fast.
data::KuPairDataset blob_dataset(int per_class_train, int per_class_test,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  data::KuPairDataset dataset;
  dataset.feature_dim = 4;
  std::int64_t next = 1;
  auto add = [&](int cls, const std::string& split) {
    data::KuPair p;
    p.a = next++;
    p.b = next++;
    p.label = static_cast<data::PairLabel>(cls);
    p.split = split;
    p.features.assign(4, 0.0);
    for (int d = 0; d < 4; ++d)
      p.features[std::size_t(d)] = (d == cls ? 3.0 : 0.0) + noise(rng);
    dataset.pairs.push_back(std::move(p));
  };
  for (int i = 0; i < per_class_train; ++i)
    for (int cls = 0; cls < 4; ++cls) add(cls, "train");
  for (int i = 0; i < per_class_test; ++i)
    for (int cls = 0; cls < 4; ++cls) add(cls, "test");
  return dataset;
}

run::ExperimentConfig fast_config() {
  run::ExperimentConfig cfg;
  cfg.folds = 2;
  cfg.repeats = 1;
  cfg.seed = 21;
  cfg.de_cfg.population_factor = 4;
  cfg.de_cfg.max_generations = 2;
  return cfg;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("kupred_runner_" + std::to_string(counter++));
    fs::remove_all(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("load_config: full key set, comments, and defaults") {
  std::istringstream in(
      "# experiment setup\n"
      "dataset = pairs.jsonl\n"
      "units = units.jsonl\n"
      "embedding = model.txt   # pretrained\n"
      "pair_mode = concat\n"
      "embed.dim = 16\n"
      "de.population_factor = 6\n"
      "de.max_generations = 3\n"
      "de.early_stop = false\n"
      "svm.c = 2.5\n"
      "svm.kernel = linear\n"
      "svm.gamma = 0.25\n"
      "folds = 5\n"
      "repeats = 2\n"
      "seed = 77\n"
      "out_dir = results\n");
  run::ExperimentConfig cfg = run::load_config(in);
  CHECK(cfg.dataset_path == "pairs.jsonl");
  CHECK(cfg.units_path == "units.jsonl");
  CHECK(cfg.embedding_path == "model.txt");
  CHECK(cfg.pair_mode == embed::PairMode::Concat);
  CHECK(cfg.embed_cfg.dim == 16);
  CHECK(cfg.de_cfg.population_factor == 6);
  CHECK(cfg.de_cfg.max_generations == 3);
  CHECK_FALSE(cfg.de_cfg.early_stop);
  CHECK(cfg.svm_defaults.c == 2.5);
  CHECK(cfg.svm_defaults.kernel == svm::Kernel::Linear);
  CHECK_FALSE(cfg.gamma_auto);
  CHECK(cfg.svm_defaults.gamma == 0.25);
  CHECK(cfg.folds == 5);
  CHECK(cfg.repeats == 2);
  CHECK(cfg.seed == 77);
  CHECK(cfg.out_dir == "results");

  std::istringstream empty("");
  run::ExperimentConfig defaults = run::load_config(empty);
  CHECK(defaults.folds == 10);
  CHECK(defaults.repeats == 1);
  CHECK(defaults.gamma_auto);
  CHECK(defaults.pair_mode == embed::PairMode::Add);
}

TEST_CASE("load_config: gamma=auto restores the 1/n_features rule") {
  std::istringstream in("svm.gamma = auto\n");
  run::ExperimentConfig cfg = run::load_config(in);
  CHECK(cfg.gamma_auto);
}

TEST_CASE("load_config: malformed input is a configuration error") {
  std::istringstream unknown("no_such_key = 1\n");
  CHECK_THROWS_AS(run::load_config(unknown), ConfigError);
  std::istringstream bad_value("folds = many\n");
  CHECK_THROWS_AS(run::load_config(bad_value), ConfigError);
  std::istringstream no_eq("just some words\n");
  CHECK_THROWS_AS(run::load_config(no_eq), ConfigError);
  std::istringstream bad_folds("folds = 1\n");
  CHECK_THROWS_AS(run::load_config(bad_folds), ConfigError);
  CHECK_THROWS_AS(run::load_config_file("/no/such/config.txt"), IoError);
}

TEST_CASE("svm_param_space: the four tuned parameters with their ranges") {
  de::ParamSpace space = run::svm_param_space(200);
  REQUIRE(space.size() == 4);
  CHECK(space.params[0].name == "C");
  CHECK(space.params[0].lo == 1.0);
  CHECK(space.params[0].hi == 50.0);
  CHECK(std::get<double>(space.params[0].default_value) == 1.0);
  CHECK(space.params[1].name == "kernel");
  CHECK(space.params[1].categories ==
        std::vector<std::string>{"linear", "poly", "rbf", "sigmoid"});
  CHECK(std::get<std::string>(space.params[1].default_value) == "rbf");
  CHECK(space.params[2].name == "gamma");
  CHECK(std::get<double>(space.params[2].default_value) ==
        doctest::Approx(0.005));  // 1/200
  CHECK(space.params[3].name == "coef0");
  CHECK(std::get<double>(space.params[3].default_value) == 0.0);
}

TEST_CASE("params_from_candidate maps positionally onto SvmParams") {
  de::Candidate c;
  c.values = {de::ParamValue(12.5), de::ParamValue(std::string("sigmoid")),
              de::ParamValue(0.3), de::ParamValue(0.7)};
  svm::SvmParams base;
  base.degree = 3;
  svm::SvmParams p = run::params_from_candidate(c, base);
  CHECK(p.c == 12.5);
  CHECK(p.kernel == svm::Kernel::Sigmoid);
  CHECK(p.gamma == 0.3);
  CHECK(p.coef0 == 0.7);
  CHECK(p.degree == 3);

  de::Candidate bad;
  bad.values = {de::ParamValue(1.0)};
  CHECK_THROWS_AS(run::params_from_candidate(bad, base), ArgumentError);
}

TEST_CASE("split_folds: 6400 pairs into 10 folds of 5760/640") {
  data::KuPairDataset dataset = blob_dataset(1600, 0, 1);
  auto splits = run::split_folds(dataset, 10, 42);
  REQUIRE(splits.size() == 10);
  for (const auto& s : splits) {
    CHECK(s.train_indices.size() == 5760);
    CHECK(s.tune_indices.size() == 640);
  }
}

TEST_CASE("split_folds: stratification forced at minimum size") {
  data::KuPairDataset dataset = blob_dataset(2, 0, 2);  // 8 pairs, 2/class
  auto splits = run::split_folds(dataset, 2, 7);
  REQUIRE(splits.size() == 2);
  for (const auto& s : splits) {
    CHECK(s.tune_indices.size() == 4);
    std::array<int, 4> seen{};
    for (std::size_t i : s.tune_indices)
      ++seen[static_cast<std::size_t>(dataset.pairs[i].label)];
    for (int c : seen) CHECK(c == 1);
  }
}

TEST_CASE("split_folds: deterministic, disjoint, and exhaustive") {
  data::KuPairDataset dataset = blob_dataset(10, 5, 3);
  auto a = run::split_folds(dataset, 4, 99);
  auto b = run::split_folds(dataset, 4, 99);
  REQUIRE(a.size() == b.size());
  for (std::size_t f = 0; f < a.size(); ++f) {
    CHECK(a[f].train_indices == b[f].train_indices);
    CHECK(a[f].tune_indices == b[f].tune_indices);
    // Tune and train partition the train split.
    std::set<std::size_t> all(a[f].train_indices.begin(),
                              a[f].train_indices.end());
    for (std::size_t i : a[f].tune_indices) CHECK(all.insert(i).second);
    CHECK(all.size() == 40);
    for (std::size_t i : all) CHECK(dataset.pairs[i].split == "train");
  }
}

TEST_CASE("split_folds: class smaller than fold count rejected") {
  data::KuPairDataset dataset = blob_dataset(2, 0, 4);
  CHECK_THROWS_AS(run::split_folds(dataset, 3, 1), DataError);
}

TEST_CASE("run_untuned: record count, gamma rule, and determinism") {
  data::KuPairDataset dataset = blob_dataset(10, 4, 5);
  run::ExperimentConfig cfg = fast_config();
  run::RunOutput out = run::run_untuned(cfg, dataset);
  CHECK(out.method == "untuned");
  CHECK(out.records.size() == 2);  // folds=2, repeats=1
  for (const auto& rec : out.records) {
    CHECK_FALSE(rec.chosen.has_value());
    CHECK(rec.test_report.accuracy >= 0.0);
    CHECK(rec.test_report.accuracy <= 1.0);
    CHECK(rec.tune_seconds == 0.0);
    CHECK(rec.train_seconds >= 0.0);
  }
  run::RunOutput again = run::run_untuned(cfg, dataset);
  CHECK(again.aggregate.overall_f1 == out.aggregate.overall_f1);
  CHECK(again.aggregate.precision == out.aggregate.precision);
  CHECK(again.aggregate.recall == out.aggregate.recall);
  CHECK(again.aggregate.accuracy == out.aggregate.accuracy);
}

TEST_CASE("run_tuned: chosen candidates recorded and deterministic") {
  data::KuPairDataset dataset = blob_dataset(10, 4, 6);
  run::ExperimentConfig cfg = fast_config();
  run::RunOutput out = run::run_tuned(cfg, dataset);
  CHECK(out.method == "tuned");
  CHECK(out.records.size() == 2);
  de::ParamSpace space = run::svm_param_space(dataset.feature_dim);
  for (const auto& rec : out.records) {
    REQUIRE(rec.chosen.has_value());
    CHECK(space.contains(rec.chosen->values));
    CHECK(rec.tune_f1 >= 0.0);
    CHECK(rec.tune_f1 <= 1.0);
    CHECK_FALSE(rec.trace.empty());
  }
  run::RunOutput again = run::run_tuned(cfg, dataset);
  CHECK(again.aggregate.overall_f1 == out.aggregate.overall_f1);
  for (std::size_t i = 0; i < out.records.size(); ++i)
    CHECK(again.records[i].chosen->values == out.records[i].chosen->values);
}

TEST_CASE("run: unusable datasets rejected") {
  run::ExperimentConfig cfg = fast_config();
  data::KuPairDataset no_features = blob_dataset(10, 4, 7);
  for (auto& p : no_features.pairs) p.features.clear();
  no_features.feature_dim = 0;
  CHECK_THROWS_AS(run::run_untuned(cfg, no_features), DataError);

  data::KuPairDataset no_test = blob_dataset(10, 0, 8);
  CHECK_THROWS_AS(run::run_untuned(cfg, no_test), DataError);
}

TEST_CASE("compare: self-comparison yields zero deltas and effects") {
  data::KuPairDataset dataset = blob_dataset(10, 4, 9);
  run::RunOutput out = run::run_untuned(fast_config(), dataset);
  run::ScoreSet s = run::ScoreSet::from_run(out, data::class_names());
  run::ComparisonReport report = run::compare(s, s);
  CHECK(report.stats_available);
  CHECK_FALSE(report.entries.empty());
  for (const auto& e : report.entries) {
    CHECK(e.delta == 0.0);
    if (e.effect) {
      CHECK(e.effect->delta == 0.0);
      CHECK(e.effect->magnitude == stats::Magnitude::Negligible);
    }
    if (e.test) CHECK(e.test->p_value == 1.0);
  }
}

TEST_CASE("compare: pointwise dominance gives positive deltas, delta = 1") {
  run::ScoreSet a, b;
  a.name = "strong";
  b.name = "weak";
  a.has_distributions = b.has_distributions = true;
  for (const std::string cls : {"duplicate", "overall"}) {
    for (int r = 0; r < 10; ++r) {
      a.values["f1"][cls].push_back(0.9 + 0.005 * r);
      b.values["f1"][cls].push_back(0.5 + 0.005 * r);
    }
  }
  run::ComparisonReport report = run::compare(a, b);
  REQUIRE(report.entries.size() == 2);
  for (const auto& e : report.entries) {
    CHECK(e.delta > 0.0);
    REQUIRE(e.effect.has_value());
    CHECK(e.effect->delta == doctest::Approx(1.0));
    CHECK(e.effect->magnitude == stats::Magnitude::Large);
    REQUIRE(e.test.has_value());
    CHECK(e.test->p_value < 0.05);
    CHECK(e.adjusted_p >= e.test->p_value);
  }
}

TEST_CASE("compare: published single values skip the statistics") {
  std::istringstream csv(
      "metric,class,value\n"
      "f1,overall,0.9\n"
      "precision,overall,0.85\n");
  run::ScoreSet published =
      run::ScoreSet::from_published_csv(csv, "published");
  CHECK_FALSE(published.has_distributions);
  CHECK(published.values.at("f1").at("overall") ==
        std::vector<double>{0.9});

  data::KuPairDataset dataset = blob_dataset(10, 4, 10);
  run::RunOutput out = run::run_untuned(fast_config(), dataset);
  run::ScoreSet mine = run::ScoreSet::from_run(out, data::class_names());
  run::ComparisonReport report = run::compare(mine, published);
  CHECK_FALSE(report.stats_available);
  CHECK(report.note.find("single published values") != std::string::npos);
  for (const auto& e : report.entries) {
    CHECK_FALSE(e.test.has_value());
    CHECK_FALSE(e.effect.has_value());
  }
  // Only metric/class cells present on both sides are compared.
  CHECK(report.entries.size() == 2);
}

TEST_CASE("from_published_csv: malformed rows rejected") {
  std::istringstream bad("f1,overall\n");
  CHECK_THROWS_AS(run::ScoreSet::from_published_csv(bad, "x"), DataError);
  std::istringstream nonnum("f1,overall,best\n");
  CHECK_THROWS_AS(run::ScoreSet::from_published_csv(nonnum, "x"), DataError);
}

TEST_CASE("compare: mismatched class sets rejected") {
  run::ScoreSet a, b;
  a.has_distributions = b.has_distributions = false;
  a.values["f1"]["overall"] = {0.9};
  b.values["f1"]["duplicate"] = {0.8};
  CHECK_THROWS_AS(run::compare(a, b), ArgumentError);
}

TEST_CASE("run output JSON round trip") {
  data::KuPairDataset dataset = blob_dataset(10, 4, 11);
  run::RunOutput out = run::run_tuned(fast_config(), dataset);
  std::ostringstream buffer;
  run::save_run_output(out, buffer);
  std::istringstream in(buffer.str());
  run::RunOutput loaded = run::load_run_output(in);
  CHECK(loaded.method == out.method);
  REQUIRE(loaded.records.size() == out.records.size());
  CHECK(loaded.aggregate.overall_f1 ==
        doctest::Approx(out.aggregate.overall_f1).epsilon(1e-12));
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    CHECK(loaded.records[i].fold == out.records[i].fold);
    CHECK(loaded.records[i].chosen->values == out.records[i].chosen->values);
  }
}

TEST_CASE("emit_report: bundle contents and re-emission determinism") {
  TempDir dir;
  data::KuPairDataset dataset = blob_dataset(10, 4, 12);
  run::RunOutput tuned = run::run_tuned(fast_config(), dataset);
  run::RunOutput untuned = run::run_untuned(fast_config(), dataset);
  auto names = data::class_names();
  run::ComparisonReport cmp =
      run::compare(run::ScoreSet::from_run(tuned, names),
                   run::ScoreSet::from_run(untuned, names));

  fs::path out_dir = dir.path / "report";
  run::emit_report(tuned, {cmp}, out_dir.string());
  CHECK(fs::exists(out_dir / "metrics.csv"));
  CHECK(fs::exists(out_dir / "metrics_table.txt"));
  CHECK(fs::exists(out_dir / "run_records.json"));
  CHECK(fs::exists(out_dir / "timings.txt"));
  CHECK(fs::exists(out_dir / "delta_tuned_vs_untuned.csv"));
  CHECK(fs::exists(out_dir / "delta_tuned_vs_untuned.txt"));

  // run_records.json carries no wall-clock values.
  std::istringstream rec_in(slurp(out_dir / "run_records.json"));
  run::RunOutput stripped = run::load_run_output(rec_in);
  CHECK(stripped.total_seconds == 0.0);
  for (const auto& rec : stripped.records) {
    CHECK(rec.tune_seconds == 0.0);
    CHECK(rec.train_seconds == 0.0);
  }

  // Re-emission from identical inputs is byte-identical.
  std::string first_metrics = slurp(out_dir / "metrics.csv");
  std::string first_records = slurp(out_dir / "run_records.json");
  std::string first_delta = slurp(out_dir / "delta_tuned_vs_untuned.csv");
  run::emit_report(tuned, {cmp}, out_dir.string());
  CHECK(slurp(out_dir / "metrics.csv") == first_metrics);
  CHECK(slurp(out_dir / "run_records.json") == first_records);
  CHECK(slurp(out_dir / "delta_tuned_vs_untuned.csv") == first_delta);

  // No comparisons: tables only.
  fs::path bare_dir = dir.path / "bare";
  run::emit_report(tuned, {}, bare_dir.string());
  CHECK(fs::exists(bare_dir / "metrics.csv"));
  CHECK_FALSE(fs::exists(bare_dir / "delta_tuned_vs_untuned.csv"));
}

TEST_CASE("emit_report: speedup file states the timing ratio") {
  TempDir dir;
  data::KuPairDataset dataset = blob_dataset(10, 4, 13);
  run::RunOutput out = run::run_untuned(fast_config(), dataset);
  run::ScoreSet a = run::ScoreSet::from_run(out, data::class_names());
  run::ScoreSet b = a;
  b.name = "slow";
  a.total_seconds = 50.0;
  b.total_seconds = 600.0;
  run::ComparisonReport cmp = run::compare(a, b);
  fs::path out_dir = dir.path / "speed";
  run::emit_report(out, {cmp}, out_dir.string());
  std::string text = slurp(out_dir / "delta_untuned_vs_slow_speedup.txt");
  CHECK(text.find("12.0X") != std::string::npos);
}
