#include "kupred/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "kupred/errors.hpp"

#include <json.hpp>

namespace kupred::run {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: bad boolean for " + key + ": " + v);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (folds < 2) throw ConfigError("config: folds must be >= 2");
  if (repeats < 1) throw ConfigError("config: repeats must be >= 1");
  de_cfg.validate();
  svm_defaults.validate();
}

ExperimentConfig load_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (!blank)
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      std::size_t b = s.find_first_not_of(" \t\r");
      std::size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "dataset") cfg.dataset_path = value;
      else if (key == "units") cfg.units_path = value;
      else if (key == "embedding") cfg.embedding_path = value;
      else if (key == "train_embedding")
        cfg.train_embedding = parse_bool(value, key);
      else if (key == "embed.dim") cfg.embed_cfg.dim = std::stoi(value);
      else if (key == "embed.window") cfg.embed_cfg.window = std::stoi(value);
      else if (key == "embed.negatives")
        cfg.embed_cfg.negatives = std::stoi(value);
      else if (key == "embed.epochs") cfg.embed_cfg.epochs = std::stoi(value);
      else if (key == "embed.min_count")
        cfg.embed_cfg.min_count = std::stoi(value);
      else if (key == "embed.initial_lr")
        cfg.embed_cfg.initial_lr = std::stod(value);
      else if (key == "pair_mode")
        cfg.pair_mode = embed::pair_mode_from_string(value);
      else if (key == "de.population_factor")
        cfg.de_cfg.population_factor = std::stoi(value);
      else if (key == "de.crossover_prob")
        cfg.de_cfg.crossover_prob = std::stod(value);
      else if (key == "de.diff_weight")
        cfg.de_cfg.diff_weight = std::stod(value);
      else if (key == "de.max_generations")
        cfg.de_cfg.max_generations = std::stoi(value);
      else if (key == "de.early_stop")
        cfg.de_cfg.early_stop = parse_bool(value, key);
      else if (key == "svm.c") cfg.svm_defaults.c = std::stod(value);
      else if (key == "svm.kernel")
        cfg.svm_defaults.kernel = svm::kernel_from_string(value);
      else if (key == "svm.gamma") {
        if (value == "auto") {
          cfg.gamma_auto = true;
        } else {
          cfg.gamma_auto = false;
          cfg.svm_defaults.gamma = std::stod(value);
        }
      } else if (key == "svm.coef0")
        cfg.svm_defaults.coef0 = std::stod(value);
      else if (key == "svm.degree") cfg.svm_defaults.degree = std::stoi(value);
      else if (key == "smo.tolerance") cfg.smo.tolerance = std::stod(value);
      else if (key == "smo.max_passes") cfg.smo.max_passes = std::stoi(value);
      else if (key == "folds") cfg.folds = std::stoi(value);
      else if (key == "repeats") cfg.repeats = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "out_dir") cfg.out_dir = value;
      else
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unknown key '" + key + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": bad value for '" + key + "': " + value);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  return load_config(in);
}

de::ParamSpace svm_param_space(int n_features) {
  de::ParamSpace space;
  space.params.push_back(de::ParamDef::continuous("C", 1.0, 50.0, 1.0));
  space.params.push_back(de::ParamDef::categorical(
      "kernel", {"linear", "poly", "rbf", "sigmoid"}, "rbf"));
  space.params.push_back(de::ParamDef::continuous(
      "gamma", 0.0, 1.0, n_features > 0 ? 1.0 / n_features : 0.0));
  space.params.push_back(de::ParamDef::continuous("coef0", 0.0, 1.0, 0.0));
  return space;
}

svm::SvmParams params_from_candidate(const de::Candidate& candidate,
                                     const svm::SvmParams& base) {
  if (candidate.values.size() != 4)
    throw ArgumentError("candidate does not match the SVM parameter space");
  svm::SvmParams p = base;
  p.c = std::get<double>(candidate.values[0]);
  p.kernel = svm::kernel_from_string(std::get<std::string>(candidate.values[1]));
  p.gamma = std::get<double>(candidate.values[2]);
  p.coef0 = std::get<double>(candidate.values[3]);
  return p;
}

std::vector<FoldSplit> split_folds(const data::KuPairDataset& dataset,
                                   int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("split_folds: folds must be >= 2");
  std::vector<std::vector<std::size_t>> by_class(data::kNumClasses);
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i)
    if (dataset.pairs[i].split == "train")
      by_class[static_cast<std::size_t>(dataset.pairs[i].label)].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> fold_members(
      static_cast<std::size_t>(folds));
  for (auto& indices : by_class) {
    if (indices.empty()) continue;
    if (indices.size() < static_cast<std::size_t>(folds))
      throw DataError("split_folds: a class has fewer members than folds");
    std::shuffle(indices.begin(), indices.end(), rng);
    for (std::size_t i = 0; i < indices.size(); ++i)
      fold_members[i % folds].push_back(indices[i]);
  }

  std::vector<FoldSplit> splits(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f) {
    auto& split = splits[static_cast<std::size_t>(f)];
    split.tune_indices = fold_members[static_cast<std::size_t>(f)];
    std::sort(split.tune_indices.begin(), split.tune_indices.end());
    for (int g = 0; g < folds; ++g) {
      if (g == f) continue;
      split.train_indices.insert(split.train_indices.end(),
                                 fold_members[std::size_t(g)].begin(),
                                 fold_members[std::size_t(g)].end());
    }
    std::sort(split.train_indices.begin(), split.train_indices.end());
  }
  return splits;
}

namespace {

struct Xy {
  svm::Matrix x;
  std::vector<int> y;
};

Xy gather(const data::KuPairDataset& dataset,
          const std::vector<std::size_t>& indices) {
  Xy out;
  out.x.reserve(indices.size());
  out.y.reserve(indices.size());
  for (std::size_t i : indices) {
    out.x.push_back(dataset.pairs[i].features);
    out.y.push_back(static_cast<int>(dataset.pairs[i].label));
  }
  return out;
}

std::vector<std::size_t> split_indices(const data::KuPairDataset& dataset,
                                       std::string_view split) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i)
    if (dataset.pairs[i].split == split) out.push_back(i);
  return out;
}

metrics::MetricsReport evaluate_model(const svm::MulticlassModel& model,
                                      const Xy& test) {
  std::vector<int> predicted;
  predicted.reserve(test.x.size());
  for (const auto& row : test.x) predicted.push_back(model.predict(row));
  return metrics::score(
      metrics::confusion(test.y, predicted, data::kNumClasses));
}

metrics::MetricsReport mean_report(const std::vector<RunRecord>& records) {
  if (records.empty()) throw ArgumentError("no run records to aggregate");
  metrics::MetricsReport agg;
  const auto& first = records[0].test_report;
  agg.precision.assign(first.precision.size(), 0.0);
  agg.recall.assign(first.recall.size(), 0.0);
  agg.f1.assign(first.f1.size(), 0.0);
  for (const auto& rec : records) {
    const auto& r = rec.test_report;
    for (std::size_t j = 0; j < agg.precision.size(); ++j) {
      agg.precision[j] += r.precision[j];
      agg.recall[j] += r.recall[j];
      agg.f1[j] += r.f1[j];
    }
    agg.accuracy += r.accuracy;
    agg.zero_denominator_hit = agg.zero_denominator_hit || r.zero_denominator_hit;
  }
  const double n = static_cast<double>(records.size());
  for (std::size_t j = 0; j < agg.precision.size(); ++j) {
    agg.precision[j] /= n;
    agg.recall[j] /= n;
    agg.f1[j] /= n;
  }
  agg.accuracy /= n;
  agg.overall_precision = metrics::macro_average(agg.precision);
  agg.overall_recall = metrics::macro_average(agg.recall);
  agg.overall_f1 = metrics::macro_average(agg.f1);
  return agg;
}

RunOutput run_impl(const ExperimentConfig& cfg,
                   const data::KuPairDataset& dataset, bool tuned) {
  cfg.validate();
  if (dataset.feature_dim == 0)
    throw DataError("run: dataset has no features; featurize first");

  const auto t_total = Clock::now();
  auto test_idx = split_indices(dataset, "test");
  if (test_idx.empty()) throw DataError("run: dataset has no test split");
  Xy test = gather(dataset, test_idx);

  svm::SvmParams base = cfg.svm_defaults;
  if (cfg.gamma_auto) base.gamma = 1.0 / dataset.feature_dim;

  RunOutput out;
  out.method = tuned ? "tuned" : "untuned";

  for (int rep = 0; rep < cfg.repeats; ++rep) {
    // Fold assignment is shared by tuned and untuned runs under the same
    // seed, so comparisons are paired.
    std::uint64_t rep_seed = cfg.seed + static_cast<std::uint64_t>(rep);
    auto splits = split_folds(dataset, cfg.folds, rep_seed);
    for (int fold = 0; fold < cfg.folds; ++fold) {
      RunRecord rec;
      rec.fold = fold;
      rec.repeat = rep;
      const auto& split = splits[static_cast<std::size_t>(fold)];
      Xy new_train = gather(dataset, split.train_indices);
      Xy tune_set = gather(dataset, split.tune_indices);

      svm::SvmParams chosen_params = base;
      if (tuned) {
        const auto t_tune = Clock::now();
        de::ParamSpace space = svm_param_space(dataset.feature_dim);
        de::Objective objective = [&](const de::Candidate& cand) {
          svm::SvmParams p = params_from_candidate(cand, base);
          auto model = svm::train_multiclass(new_train.x, new_train.y, p,
                                             cfg.smo);
          return evaluate_model(model, tune_set).overall_f1;
        };
        de::DeConfig de_cfg = cfg.de_cfg;
        de_cfg.seed = rep_seed * 1000003ULL +
                      static_cast<std::uint64_t>(fold);
        de::TuneResult tuned_result = de::tune(space, objective, de_cfg);
        rec.chosen = tuned_result.best;
        rec.tune_f1 = *tuned_result.best.score;
        rec.trace = std::move(tuned_result.trace);
        chosen_params = params_from_candidate(tuned_result.best, base);
        rec.tune_seconds = seconds_since(t_tune);
      }

      const auto t_train = Clock::now();
      auto model = svm::train_multiclass(new_train.x, new_train.y,
                                         chosen_params, cfg.smo);
      rec.train_seconds = seconds_since(t_train);

      const auto t_test = Clock::now();
      try {
        rec.test_report = evaluate_model(model, test);
      } catch (const std::exception& e) {
        throw DataError("run: fold " + std::to_string(fold) +
                        " failed: " + e.what());
      }
      rec.test_seconds = seconds_since(t_test);
      out.records.push_back(std::move(rec));
    }
  }
  out.aggregate = mean_report(out.records);
  out.total_seconds = seconds_since(t_total);
  return out;
}

}  // namespace

RunOutput run_tuned(const ExperimentConfig& cfg,
                    const data::KuPairDataset& featurized) {
  return run_impl(cfg, featurized, true);
}

RunOutput run_untuned(const ExperimentConfig& cfg,
                      const data::KuPairDataset& featurized) {
  return run_impl(cfg, featurized, false);
}

ScoreSet ScoreSet::from_run(const RunOutput& run,
                            const std::vector<std::string>& class_names) {
  ScoreSet s;
  s.name = run.method;
  s.has_distributions = true;
  s.total_seconds = run.total_seconds;
  for (const auto& rec : run.records) {
    const auto& r = rec.test_report;
    for (std::size_t j = 0; j < r.precision.size(); ++j) {
      const std::string& cls = class_names.at(j);
      s.values["precision"][cls].push_back(r.precision[j]);
      s.values["recall"][cls].push_back(r.recall[j]);
      s.values["f1"][cls].push_back(r.f1[j]);
    }
    s.values["precision"]["overall"].push_back(r.overall_precision);
    s.values["recall"]["overall"].push_back(r.overall_recall);
    s.values["f1"]["overall"].push_back(r.overall_f1);
    s.values["accuracy"]["overall"].push_back(r.accuracy);
  }
  return s;
}

ScoreSet ScoreSet::from_published_csv(std::istream& in, std::string name) {
  ScoreSet s;
  s.name = std::move(name);
  s.has_distributions = false;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.starts_with('#')) continue;
    std::istringstream row(line);
    std::string metric, cls, value;
    if (!std::getline(row, metric, ',') || !std::getline(row, cls, ',') ||
        !std::getline(row, value, ','))
      throw DataError("published csv line " + std::to_string(line_no) +
                      ": expected metric,class,value");
    if (metric == "metric") continue;  // header
    try {
      s.values[metric][cls] = {std::stod(value)};
    } catch (const std::exception&) {
      throw DataError("published csv line " + std::to_string(line_no) +
                      ": bad value " + value);
    }
  }
  return s;
}

ComparisonReport compare(const ScoreSet& a, const ScoreSet& b) {
  ComparisonReport report;
  report.method_a = a.name;
  report.method_b = b.name;
  report.total_seconds_a = a.total_seconds;
  report.total_seconds_b = b.total_seconds;
  report.stats_available = a.has_distributions && b.has_distributions;
  if (!report.stats_available)
    report.note = "statistics not available: single published values";

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };

  for (const auto& [metric, by_class] : a.values) {
    auto mb = b.values.find(metric);
    if (mb == b.values.end()) continue;
    // Published tables may carry a subset of classes; compare the cells
    // present on both sides and reject metrics sharing none.
    std::size_t shared = 0;
    for (const auto& [cls, va] : by_class)
      if (mb->second.count(cls)) ++shared;
    if (shared == 0)
      throw ArgumentError("compare: class sets differ for metric " + metric);
    for (const auto& [cls, va] : by_class) {
      auto cb = mb->second.find(cls);
      if (cb == mb->second.end()) continue;
      const auto& vb = cb->second;
      ComparisonEntry e;
      e.metric = metric;
      e.cls = cls;
      e.mean_a = mean(va);
      e.mean_b = mean(vb);
      e.delta = e.mean_a - e.mean_b;
      if (report.stats_available && va.size() == vb.size() && va.size() > 1) {
        e.test = stats::wilcoxon_signed_rank(va, vb);
        e.effect = stats::cliffs_delta(va, vb);
      }
      report.entries.push_back(std::move(e));
    }
  }

  // BH adjustment across the whole metric-class family.
  std::vector<double> raw;
  std::vector<std::size_t> with_test;
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    if (report.entries[i].test) {
      raw.push_back(report.entries[i].test->p_value);
      with_test.push_back(i);
    }
  }
  if (!raw.empty()) {
    auto adjusted = stats::bh_adjust(raw);
    for (std::size_t i = 0; i < with_test.size(); ++i)
      report.entries[with_test[i]].adjusted_p = adjusted[i];
  }
  return report;
}

}  // namespace kupred::run
