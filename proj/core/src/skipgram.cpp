#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "kupred/embed.hpp"
#include "kupred/errors.hpp"

namespace kupred::embed {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Unigram^0.75 table for drawing negative samples.
class NoiseTable {
public:
  NoiseTable(const std::vector<std::int64_t>& counts) {
    cumulative_.reserve(counts.size());
    double total = 0.0;
    for (auto c : counts) {
      total += std::pow(static_cast<double>(c), 0.75);
      cumulative_.push_back(total);
    }
    total_ = total;
  }

  int draw(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> dist(0.0, total_);
    double u = dist(rng);
    auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<int>(it - cumulative_.begin());
  }

private:
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

}  // namespace

void SkipGramConfig::validate() const {
  if (dim < 1) throw ConfigError("skip-gram dim must be >= 1");
  if (window < 1) throw ConfigError("skip-gram window must be >= 1");
  if (negatives < 1) throw ConfigError("skip-gram negatives must be >= 1");
  if (epochs < 0) throw ConfigError("skip-gram epochs must be >= 0");
  if (min_count < 1) throw ConfigError("skip-gram min_count must be >= 1");
  if (!(initial_lr > 0.0)) throw ConfigError("learning rate must be > 0");
}

bool EmbeddingModel::has(std::string_view word) const {
  return vocab.find(std::string(word)) != vocab.end();
}

std::span<const double> EmbeddingModel::input_row(int index) const {
  return {input_vectors.data() + static_cast<std::size_t>(index) * dim(),
          static_cast<std::size_t>(dim())};
}

std::span<const double> EmbeddingModel::output_row(int index) const {
  return {output_vectors.data() + static_cast<std::size_t>(index) * dim(),
          static_cast<std::size_t>(dim())};
}

std::span<const double> EmbeddingModel::input_vector(
    std::string_view word) const {
  auto it = vocab.find(std::string(word));
  if (it == vocab.end())
    throw ArgumentError("word not in vocabulary: " + std::string(word));
  return input_row(it->second);
}

double negative_sampling_loss(
    std::span<const double> center, std::span<const double> positive,
    const std::vector<std::span<const double>>& negatives) {
  double loss = -std::log(sigmoid(dot(positive, center)));
  for (const auto& neg : negatives)
    loss -= std::log(sigmoid(-dot(neg, center)));
  return loss;
}

double negative_sampling_gradients(
    std::span<const double> center, std::span<const double> positive,
    const std::vector<std::span<const double>>& negatives,
    std::span<double> grad_center, std::span<double> grad_positive,
    const std::vector<std::span<double>>& grad_negatives) {
  const std::size_t d = center.size();
  std::fill(grad_center.begin(), grad_center.end(), 0.0);

  // d/dx [-log sigmoid(x)] = sigmoid(x) - 1
  double gp = sigmoid(dot(positive, center)) - 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    grad_positive[i] = gp * center[i];
    grad_center[i] += gp * positive[i];
  }
  double loss = -std::log(sigmoid(dot(positive, center)));
  for (std::size_t n = 0; n < negatives.size(); ++n) {
    double s = dot(negatives[n], center);
    double gn = sigmoid(s);  // d/dx [-log sigmoid(-x)] = sigmoid(x)
    for (std::size_t i = 0; i < d; ++i) {
      grad_negatives[n][i] = gn * center[i];
      grad_center[i] += gn * negatives[n][i];
    }
    loss -= std::log(sigmoid(-s));
  }
  return loss;
}

EmbeddingModel train_skipgram(const Corpus& corpus, const SkipGramConfig& cfg,
                              std::vector<double>* epoch_losses) {
  cfg.validate();

  std::unordered_map<std::string, std::int64_t> freq;
  for (const auto& doc : corpus)
    for (const auto& tok : doc) ++freq[tok];

  EmbeddingModel model;
  model.config = cfg;
  // Deterministic vocab order: by descending count, then lexicographic.
  for (const auto& [word, count] : freq)
    if (count >= cfg.min_count) model.words.push_back(word);
  std::sort(model.words.begin(), model.words.end(),
            [&](const std::string& a, const std::string& b) {
              if (freq[a] != freq[b]) return freq[a] > freq[b];
              return a < b;
            });
  if (model.words.empty())
    throw DataError("no word meets min_count; effective vocabulary empty");

  const std::size_t vocab_size = model.words.size();
  std::vector<std::int64_t> counts(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    model.vocab[model.words[i]] = static_cast<int>(i);
    counts[i] = freq[model.words[i]];
  }

  const std::size_t d = static_cast<std::size_t>(cfg.dim);
  std::mt19937_64 rng(cfg.seed);
  model.input_vectors.resize(vocab_size * d);
  model.output_vectors.assign(vocab_size * d, 0.0);
  std::uniform_real_distribution<double> init(-0.5 / cfg.dim, 0.5 / cfg.dim);
  for (auto& v : model.input_vectors) v = init(rng);

  // Encode the corpus once, dropping OOV tokens.
  std::vector<std::vector<int>> encoded;
  std::size_t total_pairs = 0;
  for (const auto& doc : corpus) {
    std::vector<int> ids;
    for (const auto& tok : doc) {
      auto it = model.vocab.find(tok);
      if (it != model.vocab.end()) ids.push_back(it->second);
    }
    if (ids.size() >= 2) {
      total_pairs += ids.size();
      encoded.push_back(std::move(ids));
    }
  }

  NoiseTable noise(counts);
  double* in = model.input_vectors.data();
  double* out = model.output_vectors.data();
  std::vector<double> grad_center(d);

  const std::int64_t total_steps =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(cfg.epochs) *
                                    static_cast<std::int64_t>(total_pairs));
  std::int64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t epoch_examples = 0;
    for (const auto& ids : encoded) {
      for (std::size_t pos = 0; pos < ids.size(); ++pos, ++step) {
        double lr = cfg.initial_lr *
                    std::max(1.0 - static_cast<double>(step) / total_steps,
                             1e-4);
        const int center = ids[pos];
        double* vc = in + static_cast<std::size_t>(center) * d;
        const std::size_t lo =
            pos >= static_cast<std::size_t>(cfg.window) ? pos - cfg.window : 0;
        const std::size_t hi =
            std::min(ids.size() - 1, pos + static_cast<std::size_t>(cfg.window));
        for (std::size_t ctx = lo; ctx <= hi; ++ctx) {
          if (ctx == pos) continue;
          const int target = ids[ctx];
          std::fill(grad_center.begin(), grad_center.end(), 0.0);

          double* vo = out + static_cast<std::size_t>(target) * d;
          double s = 0.0;
          for (std::size_t i = 0; i < d; ++i) s += vo[i] * vc[i];
          double g = sigmoid(s) - 1.0;
          epoch_loss -= std::log(sigmoid(s));
          for (std::size_t i = 0; i < d; ++i) {
            grad_center[i] += g * vo[i];
            vo[i] -= lr * g * vc[i];
          }
          for (int n = 0; n < cfg.negatives; ++n) {
            int neg = noise.draw(rng);
            if (neg == target) continue;  // skip accidental positives
            double* vn = out + static_cast<std::size_t>(neg) * d;
            double sn = 0.0;
            for (std::size_t i = 0; i < d; ++i) sn += vn[i] * vc[i];
            double gn = sigmoid(sn);
            epoch_loss -= std::log(sigmoid(-sn));
            for (std::size_t i = 0; i < d; ++i) {
              grad_center[i] += gn * vn[i];
              vn[i] -= lr * gn * vc[i];
            }
          }
          for (std::size_t i = 0; i < d; ++i) vc[i] -= lr * grad_center[i];
          ++epoch_examples;
        }
      }
    }
    if (epoch_losses)
      epoch_losses->push_back(
          epoch_examples ? epoch_loss / static_cast<double>(epoch_examples)
                         : 0.0);
  }
  return model;
}

double softmax_prob(const EmbeddingModel& model, std::string_view center,
                    std::string_view target) {
  auto ci = model.vocab.find(std::string(center));
  auto ti = model.vocab.find(std::string(target));
  if (ci == model.vocab.end() || ti == model.vocab.end())
    throw ArgumentError("softmax_prob: word not in vocabulary");
  auto vc = model.input_row(ci->second);

  // Log-sum-exp over the full vocabulary.
  const std::size_t vocab_size = model.vocab_size();
  double max_score = -1e300;
  std::vector<double> scores(vocab_size);
  for (std::size_t w = 0; w < vocab_size; ++w) {
    scores[w] = dot(model.output_row(static_cast<int>(w)), vc);
    max_score = std::max(max_score, scores[w]);
  }
  double denom = 0.0;
  for (double s : scores) denom += std::exp(s - max_score);
  return std::exp(scores[static_cast<std::size_t>(ti->second)] - max_score) /
         denom;
}

std::vector<double> ku_vector(const EmbeddingModel& model,
                              const TokenSeq& tokens) {
  std::vector<double> sum(static_cast<std::size_t>(model.dim()), 0.0);
  for (const auto& tok : tokens) {
    auto it = model.vocab.find(tok);
    if (it == model.vocab.end()) continue;
    auto row = model.input_row(it->second);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += row[i];
  }
  return sum;
}

PairMode pair_mode_from_string(std::string_view s) {
  if (s == "add") return PairMode::Add;
  if (s == "concat") return PairMode::Concat;
  throw ConfigError("unknown pair mode: " + std::string(s));
}

std::string to_string(PairMode mode) {
  return mode == PairMode::Add ? "add" : "concat";
}

std::vector<double> pair_features(const EmbeddingModel& model,
                                  const TokenSeq& tokens_a,
                                  const TokenSeq& tokens_b, PairMode mode) {
  std::vector<double> a = ku_vector(model, tokens_a);
  std::vector<double> b = ku_vector(model, tokens_b);
  if (mode == PairMode::Add) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
  }
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void save_word2vec_text(const EmbeddingModel& model, std::ostream& out) {
  out << model.vocab_size() << " " << model.dim() << "\n";
  char buf[32];
  for (std::size_t w = 0; w < model.vocab_size(); ++w) {
    out << model.words[w];
    auto row = model.input_row(static_cast<int>(w));
    for (double x : row) {
      std::snprintf(buf, sizeof(buf), "%.9g", x);
      out << " " << buf;
    }
    out << "\n";
  }
}

EmbeddingModel load_word2vec_text(std::istream& in) {
  std::size_t vocab_size = 0;
  int dim = 0;
  if (!(in >> vocab_size >> dim) || dim < 1)
    throw DataError("word2vec text: bad header");
  EmbeddingModel model;
  model.config.dim = dim;
  model.words.reserve(vocab_size);
  model.input_vectors.reserve(vocab_size * static_cast<std::size_t>(dim));
  for (std::size_t w = 0; w < vocab_size; ++w) {
    std::string word;
    if (!(in >> word))
      throw DataError("word2vec text: truncated at word " +
                      std::to_string(w));
    model.vocab[word] = static_cast<int>(w);
    model.words.push_back(word);
    for (int i = 0; i < dim; ++i) {
      double x;
      if (!(in >> x))
        throw DataError("word2vec text: truncated vector for '" + word + "'");
      model.input_vectors.push_back(x);
    }
  }
  model.output_vectors.assign(model.input_vectors.size(), 0.0);
  return model;
}

}  // namespace kupred::embed
