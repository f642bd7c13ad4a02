#include <random>
#include <sstream>

#include "kupred/data.hpp"
#include "kupred/errors.hpp"

namespace kupred::data {

namespace {

// Four topic vocabularies plus one marker vocabulary per relatedness
// class; the markers make the pair classes learnable from summed
// embeddings while the topics supply within-class variety.
std::vector<std::string> make_vocab(const std::string& prefix, int size) {
  std::vector<std::string> words;
  words.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i)
    words.push_back(prefix + std::to_string(i));
  return words;
}

}  // namespace

SyntheticData make_synthetic(const SyntheticConfig& cfg) {
  if (cfg.documents < 8 || cfg.train_pairs < kNumClasses ||
      cfg.test_pairs < kNumClasses)
    throw ConfigError("make_synthetic: sizes too small");
  if (cfg.train_pairs % kNumClasses || cfg.test_pairs % kNumClasses)
    throw ConfigError("make_synthetic: pair counts must be multiples of 4");
  if ((cfg.train_pairs + cfg.test_pairs) * 2 > cfg.documents)
    throw ConfigError("make_synthetic: not enough documents for the pairs");

  std::mt19937_64 rng(cfg.seed);

  const int kTopics = 4;
  std::vector<std::vector<std::string>> topic_vocab;
  for (int t = 0; t < kTopics; ++t)
    topic_vocab.push_back(make_vocab("topic" + std::to_string(t) + "w", 40));
  std::vector<std::vector<std::string>> marker_vocab;
  for (int c = 0; c < kNumClasses; ++c)
    marker_vocab.push_back(make_vocab("mark" + std::to_string(c) + "w", 20));
  std::vector<std::string> shared = make_vocab("common", 60);

  std::uniform_int_distribution<int> len_dist(cfg.doc_len_min,
                                              cfg.doc_len_max);
  std::uniform_int_distribution<int> topic_dist(0, kTopics - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto pick = [&](const std::vector<std::string>& vocab) -> const std::string& {
    std::uniform_int_distribution<std::size_t> d(0, vocab.size() - 1);
    return vocab[d(rng)];
  };

  auto make_doc = [&](int topic, int marker_class) {
    std::ostringstream body;
    int len = len_dist(rng);
    for (int i = 0; i < len; ++i) {
      if (i) body << " ";
      double u = unit(rng);
      if (u < 0.25)
        body << pick(marker_vocab[std::size_t(marker_class)]);
      else if (u < 0.85)
        body << pick(topic_vocab[std::size_t(topic)]);
      else
        body << pick(shared);
    }
    return body.str();
  };

  SyntheticData out;
  std::int64_t next_id = 1;

  auto emit_pair = [&](int cls, const std::string& split) {
    int topic = topic_dist(rng);
    KnowledgeUnit ua, ub;
    ua.id = next_id++;
    ub.id = next_id++;
    ua.title = "synthetic unit " + std::to_string(ua.id);
    ub.title = "synthetic unit " + std::to_string(ub.id);
    ua.body = make_doc(topic, cls);
    ub.body = make_doc(topic, cls);
    out.units.push_back(std::move(ua));
    out.units.push_back(std::move(ub));
    out.dataset.pairs.push_back({out.units[out.units.size() - 2].id,
                                 out.units.back().id,
                                 static_cast<PairLabel>(cls), split, {}});
  };

  for (int i = 0; i < cfg.train_pairs; ++i)
    emit_pair(i % kNumClasses, "train");
  for (int i = 0; i < cfg.test_pairs; ++i)
    emit_pair(i % kNumClasses, "test");

  // Top the corpus up to the requested document count with unpaired
  // background units so embedding training sees all vocabularies.
  while (static_cast<int>(out.units.size()) < cfg.documents) {
    KnowledgeUnit u;
    u.id = next_id++;
    u.title = "synthetic filler " + std::to_string(u.id);
    u.body = make_doc(topic_dist(rng),
                      static_cast<int>(next_id) % kNumClasses);
    out.units.push_back(std::move(u));
  }
  return out;
}

}  // namespace kupred::data
