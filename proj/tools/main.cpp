// kupred: knowledge-unit relatedness prediction with a DE-tuned kernel SVM.
//
// Subcommands: ingest, embed, tune, baseline, compare, report, synth.
// Exit codes: 0 success, 1 data error, 2 configuration error, 3 internal.

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "kupred/data.hpp"
#include "kupred/embed.hpp"
#include "kupred/errors.hpp"
#include "kupred/runner.hpp"

namespace fs = std::filesystem;
using namespace kupred;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

data::TextIndex tokenize_units(const std::vector<data::KnowledgeUnit>& units,
                               std::size_t code_threshold) {
  data::TextIndex texts;
  for (const auto& u : units)
    texts[u.id] = embed::preprocess(u.text(), code_threshold);
  return texts;
}

embed::Corpus corpus_from_units(const data::TextIndex& texts) {
  embed::Corpus corpus;
  corpus.reserve(texts.size());
  // Deterministic corpus order regardless of hash-map iteration.
  std::vector<std::int64_t> ids;
  ids.reserve(texts.size());
  for (const auto& [id, _] : texts) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  for (auto id : ids) corpus.push_back(texts.at(id));
  return corpus;
}

struct RunOptions {
  std::string config_path;
  std::string out_dir_override;
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
};

// Shared by `tune` and `baseline`: load config + dataset, featurize when
// needed, run, emit the report bundle.
void run_experiment(const RunOptions& opts, bool tuned) {
  run::ExperimentConfig cfg = run::load_config_file(opts.config_path);
  if (!opts.out_dir_override.empty()) cfg.out_dir = opts.out_dir_override;
  if (opts.has_seed_override) cfg.seed = opts.seed_override;
  if (cfg.dataset_path.empty())
    throw ConfigError("config: dataset path is required");

  auto in = open_in(cfg.dataset_path);
  data::KuPairDataset dataset = data::load_jsonl(in);

  if (dataset.feature_dim == 0) {
    if (cfg.units_path.empty())
      throw ConfigError(
          "dataset has no features; set 'units' (and 'embedding' or "
          "'train_embedding') in the config");
    auto units_in = open_in(cfg.units_path);
    auto units = data::load_units_jsonl(units_in);
    auto texts = tokenize_units(units, 80);

    embed::EmbeddingModel model;
    if (!cfg.embedding_path.empty()) {
      auto emb_in = open_in(cfg.embedding_path);
      model = embed::load_word2vec_text(emb_in);
    } else if (cfg.train_embedding) {
      embed::SkipGramConfig ecfg = cfg.embed_cfg;
      ecfg.seed = cfg.seed;
      model = embed::train_skipgram(corpus_from_units(texts), ecfg);
    } else {
      throw ConfigError(
          "dataset has no features and no embedding source configured");
    }
    data::featurize(dataset, texts, model, cfg.pair_mode);
  }

  run::RunOutput out =
      tuned ? run::run_tuned(cfg, dataset) : run::run_untuned(cfg, dataset);
  run::emit_report(out, {}, cfg.out_dir);

  if (tuned) {
    de::ParamSpace space = run::svm_param_space(dataset.feature_dim);
    for (const auto& rec : out.records) {
      auto trace_out = open_out(fs::path(cfg.out_dir) /
                                ("fold_" + std::to_string(rec.repeat) + "_" +
                                 std::to_string(rec.fold) + "_trace.csv"));
      de::write_trace_csv(trace_out, space, rec.trace);
    }
  }
  {
    auto sum_out = open_out(fs::path(cfg.out_dir) / "dataset_summary.txt");
    sum_out << data::summary(dataset);
  }
  std::cout << (tuned ? "tuned" : "untuned") << " run complete: "
            << out.records.size() << " folds, aggregate macro-F1 "
            << out.aggregate.overall_f1 << "\n"
            << "reports written to " << cfg.out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-unit relatedness: DE-tuned SVM over skip-gram "
               "embeddings"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand(
      "ingest", "parse a Stack Exchange dump into a labeled pair dataset");
  std::string posts_path, postlinks_path, out_pairs, out_units;
  std::size_t per_class = 100;
  std::uint64_t ingest_seed = 1;
  ingest->add_option("--posts", posts_path, "Posts.xml")->required();
  ingest->add_option("--postlinks", postlinks_path, "PostLinks.xml")
      ->required();
  ingest->add_option("--out-pairs", out_pairs, "output pair JSONL")
      ->required();
  ingest->add_option("--out-units", out_units, "output unit JSONL")
      ->required();
  ingest->add_option("--per-class", per_class, "pairs per relatedness class");
  ingest->add_option("--seed", ingest_seed, "sampling seed");

  // embed
  auto* embed_cmd = app.add_subcommand(
      "embed", "train a skip-gram embedding from unit texts");
  std::string embed_units, embed_corpus, embed_out;
  embed::SkipGramConfig embed_cfg;
  std::size_t code_threshold = 80;
  embed_cmd->add_option("--units", embed_units, "unit JSONL corpus source");
  embed_cmd->add_option("--corpus", embed_corpus,
                        "plain-text corpus, one document per line");
  embed_cmd->add_option("--out", embed_out, "output word2vec text model")
      ->required();
  embed_cmd->add_option("--dim", embed_cfg.dim, "embedding dimensionality");
  embed_cmd->add_option("--window", embed_cfg.window, "context window size");
  embed_cmd->add_option("--negatives", embed_cfg.negatives,
                        "negative samples per positive");
  embed_cmd->add_option("--epochs", embed_cfg.epochs, "training epochs");
  embed_cmd->add_option("--min-count", embed_cfg.min_count,
                        "minimum word frequency");
  embed_cmd->add_option("--lr", embed_cfg.initial_lr, "initial learning rate");
  embed_cmd->add_option("--seed", embed_cfg.seed, "training seed");
  embed_cmd->add_option("--code-threshold", code_threshold,
                        "keep code snippets shorter than this");

  // tune / baseline
  RunOptions tune_opts, baseline_opts;
  auto* tune_cmd =
      app.add_subcommand("tune", "DE-tuned SVM over the configured dataset");
  tune_cmd->add_option("--config", tune_opts.config_path, "experiment config")
      ->required();
  tune_cmd->add_option("--out-dir", tune_opts.out_dir_override,
                       "override output directory");
  auto* tune_seed = tune_cmd->add_option("--seed", tune_opts.seed_override,
                                         "override seed");
  auto* baseline_cmd = app.add_subcommand(
      "baseline", "untuned SVM run with the Table-of-defaults parameters");
  baseline_cmd
      ->add_option("--config", baseline_opts.config_path, "experiment config")
      ->required();
  baseline_cmd->add_option("--out-dir", baseline_opts.out_dir_override,
                           "override output directory");
  auto* baseline_seed = baseline_cmd->add_option(
      "--seed", baseline_opts.seed_override, "override seed");

  // compare
  auto* compare_cmd = app.add_subcommand(
      "compare", "statistical comparison of two runs (or a published table)");
  std::string cmp_a, cmp_b, cmp_published, cmp_name_b = "published",
                            cmp_out = "out";
  compare_cmd->add_option("--a", cmp_a, "run_records.json of method A")
      ->required();
  compare_cmd->add_option("--b", cmp_b, "run_records.json of method B");
  compare_cmd->add_option("--published", cmp_published,
                          "published metric,class,value CSV for method B");
  compare_cmd->add_option("--name-b", cmp_name_b,
                          "name for the published method");
  compare_cmd->add_option("--out", cmp_out, "output directory");

  // report
  auto* report_cmd =
      app.add_subcommand("report", "re-render the report bundle from a run");
  std::string report_run, report_out = "out";
  report_cmd->add_option("--run", report_run, "run_records.json")->required();
  report_cmd->add_option("--out", report_out, "output directory");

  // synth
  auto* synth_cmd = app.add_subcommand(
      "synth", "generate the bundled synthetic 4-class benchmark");
  std::string synth_dir = "synth";
  data::SyntheticConfig synth_cfg;
  synth_cmd->add_option("--out", synth_dir, "output directory");
  synth_cmd->add_option("--docs", synth_cfg.documents, "document count");
  synth_cmd->add_option("--train-pairs", synth_cfg.train_pairs,
                        "training pairs");
  synth_cmd->add_option("--test-pairs", synth_cfg.test_pairs, "test pairs");
  synth_cmd->add_option("--seed", synth_cfg.seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      data::DumpData dump =
          data::parse_dump(posts_path, postlinks_path, &std::cerr);
      std::array<std::size_t, data::kNumClasses> counts;
      counts.fill(per_class);
      data::KuPairDataset dataset =
          data::label_pairs(dump, counts, ingest_seed);
      auto pairs_out = open_out(out_pairs);
      data::save_jsonl(dataset, pairs_out);
      auto units_out = open_out(out_units);
      data::save_units_jsonl(dump.units, units_out);
      std::cout << data::summary(dataset);
    } else if (*embed_cmd) {
      embed::Corpus corpus;
      if (!embed_units.empty()) {
        auto in = open_in(embed_units);
        auto units = data::load_units_jsonl(in);
        corpus = corpus_from_units(tokenize_units(units, code_threshold));
      } else if (!embed_corpus.empty()) {
        auto in = open_in(embed_corpus);
        std::string line;
        while (std::getline(in, line))
          corpus.push_back(embed::preprocess(line, code_threshold));
      } else {
        throw ConfigError("embed: give --units or --corpus");
      }
      embed::EmbeddingModel model = embed::train_skipgram(corpus, embed_cfg);
      auto out = open_out(embed_out);
      embed::save_word2vec_text(model, out);
      std::cout << "trained " << model.vocab_size() << " x " << model.dim()
                << " embedding -> " << embed_out << "\n";
    } else if (*tune_cmd) {
      tune_opts.has_seed_override = tune_seed->count() > 0;
      run_experiment(tune_opts, true);
    } else if (*baseline_cmd) {
      baseline_opts.has_seed_override = baseline_seed->count() > 0;
      run_experiment(baseline_opts, false);
    } else if (*compare_cmd) {
      auto in_a = open_in(cmp_a);
      run::RunOutput run_a = run::load_run_output(in_a);
      run::ScoreSet a =
          run::ScoreSet::from_run(run_a, data::class_names());
      run::ScoreSet b;
      if (!cmp_b.empty()) {
        auto in_b = open_in(cmp_b);
        b = run::ScoreSet::from_run(run::load_run_output(in_b),
                                    data::class_names());
      } else if (!cmp_published.empty()) {
        auto in_b = open_in(cmp_published);
        b = run::ScoreSet::from_published_csv(in_b, cmp_name_b);
      } else {
        throw ConfigError("compare: give --b or --published");
      }
      run::ComparisonReport report = run::compare(a, b);
      std::error_code ec;
      fs::create_directories(cmp_out, ec);
      auto csv = open_out(fs::path(cmp_out) / "comparison.csv");
      run::write_comparison_csv(csv, report);
      auto table = open_out(fs::path(cmp_out) / "comparison.txt");
      run::write_comparison_table(table, report);
      std::cout << "comparison written to " << cmp_out << "\n";
    } else if (*report_cmd) {
      auto in = open_in(report_run);
      run::RunOutput run_data = run::load_run_output(in);
      run::emit_report(run_data, {}, report_out);
      std::cout << "report bundle written to " << report_out << "\n";
    } else if (*synth_cmd) {
      data::SyntheticData synth = data::make_synthetic(synth_cfg);
      auto units_out = open_out(fs::path(synth_dir) / "units.jsonl");
      data::save_units_jsonl(synth.units, units_out);
      auto pairs_out = open_out(fs::path(synth_dir) / "pairs.jsonl");
      data::save_jsonl(synth.dataset, pairs_out);
      std::cout << data::summary(synth.dataset);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
