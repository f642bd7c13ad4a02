#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kupred/embed.hpp"

namespace kupred::data {

enum class PairLabel : int {
  Duplicate = 0,
  DirectLink = 1,
  IndirectLink = 2,
  Isolated = 3,
};
constexpr int kNumClasses = 4;

PairLabel label_from_string(std::string_view s);
std::string to_string(PairLabel label);
std::vector<std::string> class_names();

// A question together with its full answer set.
struct KnowledgeUnit {
  std::int64_t id = 0;
  std::string title;
  std::string body;
  std::vector<std::string> answers;
  std::string tags;

  // Raw concatenated text (title, question body, answers).
  std::string text() const;
};

struct LinkRecord {
  std::int64_t post_id = 0;
  std::int64_t related_id = 0;
  int link_type = 0;  // 3 = duplicate in Stack Exchange dumps
};

struct DumpData {
  std::vector<KnowledgeUnit> units;
  std::vector<LinkRecord> links;
};

// One attribute map per <row .../> element; nullopt when the line holds
// no row element.
std::optional<std::map<std::string, std::string>> parse_row_attributes(
    std::string_view line);

// Stack Exchange dump ingestion. Malformed rows are skipped with a
// warning to `warnings` when given.
DumpData parse_dump(const std::string& posts_path,
                    const std::string& postlinks_path,
                    std::ostream* warnings = nullptr);

struct KuPair {
  std::int64_t a = 0;
  std::int64_t b = 0;
  PairLabel label = PairLabel::Isolated;
  std::string split;  // "train", "tune", "test" or empty
  std::vector<double> features;
};

struct KuPairDataset {
  std::vector<KuPair> pairs;
  int feature_dim = 0;  // 0 = no features attached

  std::array<std::size_t, kNumClasses> class_counts(
      std::string_view split = "") const;
  bool balanced(std::string_view split = "") const;
};

// Graph distance on the undirected postlinks graph; -1 when disconnected.
// Exposed for the labeling rules and their tests.
int link_distance(const std::vector<LinkRecord>& links, std::int64_t a,
                  std::int64_t b);

// Samples labeled pairs per the four relatedness rules.
KuPairDataset label_pairs(const DumpData& dump,
                          const std::array<std::size_t, kNumClasses>& counts,
                          std::uint64_t seed);

// Published benchmark pair lists: one record per line,
// "id_a id_b label" (label by name or 1-based index), '#' comments.
KuPairDataset load_benchmark(const std::string& train_file,
                             const std::string& test_file);

using TextIndex = std::unordered_map<std::int64_t, embed::TokenSeq>;

void featurize(KuPairDataset& dataset, const TextIndex& texts,
               const embed::EmbeddingModel& model, embed::PairMode mode);

// JSONL persistence: {"a":..,"b":..,"label":"..","split":"..","features":[..]}
void save_jsonl(const KuPairDataset& dataset, std::ostream& out);
KuPairDataset load_jsonl(std::istream& in);

void save_units_jsonl(const std::vector<KnowledgeUnit>& units,
                      std::ostream& out);
std::vector<KnowledgeUnit> load_units_jsonl(std::istream& in);

std::string summary(const KuPairDataset& dataset);

// Deterministic desk-scale 4-class corpus + pair benchmark used by the
// end-to-end tests and the `synth` subcommand.
struct SyntheticConfig {
  int documents = 2000;
  int train_pairs = 800;
  int test_pairs = 200;
  int doc_len_min = 20;
  int doc_len_max = 40;
  std::uint64_t seed = 7;
};

struct SyntheticData {
  std::vector<KnowledgeUnit> units;
  KuPairDataset dataset;  // train/test split tags set, no features
};

SyntheticData make_synthetic(const SyntheticConfig& cfg);

}  // namespace kupred::data
