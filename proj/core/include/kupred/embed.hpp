#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kupred::embed {

using TokenSeq = std::vector<std::string>;
using Corpus = std::vector<TokenSeq>;

// Strips HTML markup, keeping the text of <code> elements shorter than
// the threshold. Lowercases and splits on non-alphanumeric boundaries;
// identifiers keep internal dots and underscores.
TokenSeq preprocess(std::string_view raw,
                    std::size_t code_keep_threshold = 80);

struct SkipGramConfig {
  int dim = 200;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  int min_count = 5;
  double initial_lr = 0.025;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EmbeddingModel {
  SkipGramConfig config;
  std::vector<std::string> words;                 // index -> word
  std::unordered_map<std::string, int> vocab;     // word -> index
  // Flat row-major [V x dim]; input rows are the embeddings proper,
  // output rows are the context-side weights.
  std::vector<double> input_vectors;
  std::vector<double> output_vectors;

  int dim() const { return config.dim; }
  std::size_t vocab_size() const { return words.size(); }
  bool has(std::string_view word) const;
  std::span<const double> input_vector(std::string_view word) const;
  std::span<const double> input_row(int index) const;
  std::span<const double> output_row(int index) const;
};

// Per-epoch mean negative-sampling loss, filled when requested.
EmbeddingModel train_skipgram(const Corpus& corpus, const SkipGramConfig& cfg,
                              std::vector<double>* epoch_losses = nullptr);

// Exact full-softmax probability p(target | center). Diagnostic only;
// training optimizes the negative-sampling surrogate.
double softmax_prob(const EmbeddingModel& model, std::string_view center,
                    std::string_view target);

// Negative-sampling loss for one (center, positive, negatives) example:
//   -log sigmoid(v'_pos . v_c) - sum_n log sigmoid(-v'_n . v_c)
double negative_sampling_loss(std::span<const double> center,
                              std::span<const double> positive,
                              const std::vector<std::span<const double>>& negatives);

// Analytic gradients of the loss above; returns the loss. Gradient spans
// must match their parameter lengths and are overwritten.
double negative_sampling_gradients(
    std::span<const double> center, std::span<const double> positive,
    const std::vector<std::span<const double>>& negatives,
    std::span<double> grad_center, std::span<double> grad_positive,
    const std::vector<std::span<double>>& grad_negatives);

// Element-wise sum of input vectors; OOV tokens skipped, empty -> zero.
std::vector<double> ku_vector(const EmbeddingModel& model,
                              const TokenSeq& tokens);

enum class PairMode { Add, Concat };

PairMode pair_mode_from_string(std::string_view s);
std::string to_string(PairMode mode);

std::vector<double> pair_features(const EmbeddingModel& model,
                                  const TokenSeq& tokens_a,
                                  const TokenSeq& tokens_b, PairMode mode);

// word2vec text format: "V dim" header, then one word per line followed
// by dim floats at 9 significant digits.
void save_word2vec_text(const EmbeddingModel& model, std::ostream& out);
EmbeddingModel load_word2vec_text(std::istream& in);

}  // namespace kupred::embed
