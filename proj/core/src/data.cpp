#include "kupred/data.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "kupred/errors.hpp"

#include <json.hpp>

namespace kupred::data {

PairLabel label_from_string(std::string_view s) {
  if (s == "duplicate" || s == "1") return PairLabel::Duplicate;
  if (s == "direct" || s == "direct_link" || s == "2")
    return PairLabel::DirectLink;
  if (s == "indirect" || s == "indirect_link" || s == "3")
    return PairLabel::IndirectLink;
  if (s == "isolated" || s == "4") return PairLabel::Isolated;
  throw DataError("unknown pair label: " + std::string(s));
}

std::string to_string(PairLabel label) {
  switch (label) {
    case PairLabel::Duplicate: return "duplicate";
    case PairLabel::DirectLink: return "direct_link";
    case PairLabel::IndirectLink: return "indirect_link";
    case PairLabel::Isolated: return "isolated";
  }
  return "?";
}

std::vector<std::string> class_names() {
  return {"duplicate", "direct_link", "indirect_link", "isolated"};
}

std::string KnowledgeUnit::text() const {
  std::string t = title;
  t += " ";
  t += body;
  for (const auto& a : answers) {
    t += " ";
    t += a;
  }
  return t;
}

namespace {

std::string unescape_xml(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size();) {
    if (in[i] != '&') {
      out.push_back(in[i++]);
      continue;
    }
    std::size_t semi = in.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back(in[i++]);
      continue;
    }
    std::string_view ent = in.substr(i + 1, semi - i - 1);
    if (ent == "lt") out.push_back('<');
    else if (ent == "gt") out.push_back('>');
    else if (ent == "amp") out.push_back('&');
    else if (ent == "quot") out.push_back('"');
    else if (ent == "apos") out.push_back('\'');
    else if (!ent.empty() && ent[0] == '#') {
      long code = 0;
      try {
        code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                   ? std::stol(std::string(ent.substr(2)), nullptr, 16)
                   : std::stol(std::string(ent.substr(1)));
      } catch (...) {
        code = 0;
      }
      if (code > 0 && code < 128)
        out.push_back(static_cast<char>(code));
      else
        out.push_back(' ');
    } else {
      out.append("&").append(ent).push_back(';');
    }
    i = semi + 1;
  }
  return out;
}

std::int64_t attr_int(const std::map<std::string, std::string>& attrs,
                      const std::string& key) {
  auto it = attrs.find(key);
  if (it == attrs.end())
    throw DataError("row missing attribute " + key);
  return std::stoll(it->second);
}

std::string attr_or(const std::map<std::string, std::string>& attrs,
                    const std::string& key, std::string fallback = "") {
  auto it = attrs.find(key);
  return it == attrs.end() ? fallback : it->second;
}

}  // namespace

std::optional<std::map<std::string, std::string>> parse_row_attributes(
    std::string_view line) {
  std::size_t start = line.find("<row");
  if (start == std::string_view::npos) return std::nullopt;
  std::size_t end = line.find("/>", start);
  if (end == std::string_view::npos) return std::nullopt;
  std::string_view body = line.substr(start + 4, end - start - 4);

  std::map<std::string, std::string> attrs;
  std::size_t i = 0;
  while (i < body.size()) {
    while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i])))
      ++i;
    std::size_t eq = body.find('=', i);
    if (eq == std::string_view::npos) break;
    std::string name(body.substr(i, eq - i));
    std::size_t q1 = body.find('"', eq);
    if (q1 == std::string_view::npos) return std::nullopt;
    std::size_t q2 = body.find('"', q1 + 1);
    if (q2 == std::string_view::npos) return std::nullopt;
    attrs[name] = unescape_xml(body.substr(q1 + 1, q2 - q1 - 1));
    i = q2 + 1;
  }
  return attrs;
}

DumpData parse_dump(const std::string& posts_path,
                    const std::string& postlinks_path,
                    std::ostream* warnings) {
  std::ifstream posts(posts_path);
  if (!posts) throw IoError("cannot open posts file: " + posts_path);
  std::ifstream postlinks(postlinks_path);
  if (!postlinks)
    throw IoError("cannot open postlinks file: " + postlinks_path);

  DumpData dump;
  std::unordered_map<std::int64_t, std::size_t> unit_index;
  std::vector<std::pair<std::int64_t, std::string>> pending_answers;

  std::string line;
  long line_no = 0;
  while (std::getline(posts, line)) {
    ++line_no;
    if (line.find("<row") == std::string::npos) continue;
    auto attrs = parse_row_attributes(line);
    if (!attrs) {
      if (warnings)
        *warnings << "posts line " << line_no << ": malformed row, skipped\n";
      continue;
    }
    try {
      std::int64_t id = attr_int(*attrs, "Id");
      std::int64_t type = attr_int(*attrs, "PostTypeId");
      if (type == 1) {
        KnowledgeUnit ku;
        ku.id = id;
        ku.title = attr_or(*attrs, "Title");
        ku.body = attr_or(*attrs, "Body");
        ku.tags = attr_or(*attrs, "Tags");
        if (ku.title.empty() && ku.body.empty())
          throw DataError("question with no title and no body");
        unit_index[id] = dump.units.size();
        dump.units.push_back(std::move(ku));
      } else if (type == 2) {
        pending_answers.emplace_back(attr_int(*attrs, "ParentId"),
                                     attr_or(*attrs, "Body"));
      }
    } catch (const std::exception& e) {
      if (warnings)
        *warnings << "posts line " << line_no << ": " << e.what()
                  << ", skipped\n";
    }
  }
  // Answers may precede their question in the dump; join after the scan.
  for (auto& [parent, body] : pending_answers) {
    auto it = unit_index.find(parent);
    if (it != unit_index.end())
      dump.units[it->second].answers.push_back(std::move(body));
    else if (warnings)
      *warnings << "answer for unknown question " << parent << ", dropped\n";
  }

  line_no = 0;
  while (std::getline(postlinks, line)) {
    ++line_no;
    if (line.find("<row") == std::string::npos) continue;
    auto attrs = parse_row_attributes(line);
    if (!attrs) {
      if (warnings)
        *warnings << "postlinks line " << line_no
                  << ": malformed row, skipped\n";
      continue;
    }
    try {
      LinkRecord rec;
      rec.post_id = attr_int(*attrs, "PostId");
      rec.related_id = attr_int(*attrs, "RelatedPostId");
      rec.link_type = static_cast<int>(attr_int(*attrs, "LinkTypeId"));
      dump.links.push_back(rec);
    } catch (const std::exception& e) {
      if (warnings)
        *warnings << "postlinks line " << line_no << ": " << e.what()
                  << ", skipped\n";
    }
  }
  return dump;
}

namespace {

// Undirected adjacency over post ids.
using Graph = std::unordered_map<std::int64_t, std::vector<std::int64_t>>;

Graph build_graph(const std::vector<LinkRecord>& links) {
  Graph g;
  for (const auto& l : links) {
    g[l.post_id].push_back(l.related_id);
    g[l.related_id].push_back(l.post_id);
  }
  return g;
}

int bfs_distance(const Graph& g, std::int64_t a, std::int64_t b) {
  if (a == b) return 0;
  if (!g.count(a) || !g.count(b)) return -1;
  std::unordered_map<std::int64_t, int> dist{{a, 0}};
  std::deque<std::int64_t> queue{a};
  while (!queue.empty()) {
    std::int64_t u = queue.front();
    queue.pop_front();
    auto it = g.find(u);
    if (it == g.end()) continue;
    for (std::int64_t v : it->second) {
      if (dist.count(v)) continue;
      dist[v] = dist[u] + 1;
      if (v == b) return dist[v];
      queue.push_back(v);
    }
  }
  return -1;
}

}  // namespace

int link_distance(const std::vector<LinkRecord>& links, std::int64_t a,
                  std::int64_t b) {
  return bfs_distance(build_graph(links), a, b);
}

std::array<std::size_t, kNumClasses> KuPairDataset::class_counts(
    std::string_view split) const {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& p : pairs)
    if (split.empty() || p.split == split)
      ++counts[static_cast<std::size_t>(p.label)];
  return counts;
}

bool KuPairDataset::balanced(std::string_view split) const {
  auto counts = class_counts(split);
  for (int i = 1; i < kNumClasses; ++i)
    if (counts[std::size_t(i)] != counts[0]) return false;
  return counts[0] > 0;
}

KuPairDataset label_pairs(const DumpData& dump,
                          const std::array<std::size_t, kNumClasses>& counts,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Graph graph = build_graph(dump.links);

  std::set<std::int64_t> unit_ids;
  for (const auto& u : dump.units) unit_ids.insert(u.id);
  std::vector<std::int64_t> unit_list(unit_ids.begin(), unit_ids.end());

  auto canonical = [](std::int64_t a, std::int64_t b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  };

  KuPairDataset dataset;
  std::set<std::pair<std::int64_t, std::int64_t>> taken;

  auto emit = [&](std::int64_t a, std::int64_t b, PairLabel label) {
    auto key = canonical(a, b);
    if (a == b || taken.count(key)) return false;
    taken.insert(key);
    dataset.pairs.push_back({a, b, label, "", {}});
    return true;
  };

  // Duplicate and directly linked pairs come straight off the link table.
  std::vector<LinkRecord> shuffled = dump.links;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::size_t need_dup = counts[0], need_direct = counts[1];
  for (const auto& l : shuffled) {
    if (!unit_ids.count(l.post_id) || !unit_ids.count(l.related_id)) continue;
    if (l.link_type == 3) {
      if (need_dup && emit(l.post_id, l.related_id, PairLabel::Duplicate))
        --need_dup;
    } else {
      if (need_direct &&
          emit(l.post_id, l.related_id, PairLabel::DirectLink))
        --need_direct;
    }
    if (!need_dup && !need_direct) break;
  }
  if (need_dup)
    throw DataError("label_pairs: not enough duplicate pairs in the dump");
  if (need_direct)
    throw DataError("label_pairs: not enough directly-linked pairs");

  // Indirect (connected, distance > 2) and isolated (not linkable) pairs
  // are sampled from random unit pairs.
  if (unit_list.size() < 2)
    throw DataError("label_pairs: fewer than 2 knowledge units");
  std::uniform_int_distribution<std::size_t> pick(0, unit_list.size() - 1);
  std::size_t need_indirect = counts[2], need_isolated = counts[3];
  std::size_t attempts = 0;
  const std::size_t max_attempts =
      10000 * (counts[2] + counts[3]) + 10000;
  while ((need_indirect || need_isolated) && attempts < max_attempts) {
    ++attempts;
    std::int64_t a = unit_list[pick(rng)];
    std::int64_t b = unit_list[pick(rng)];
    if (a == b) continue;
    int d = bfs_distance(graph, a, b);
    if (d < 0) {
      if (need_isolated && emit(a, b, PairLabel::Isolated)) --need_isolated;
    } else if (d > 2) {
      if (need_indirect && emit(a, b, PairLabel::IndirectLink))
        --need_indirect;
    }
  }
  if (need_indirect)
    throw DataError("label_pairs: not enough indirectly-linked pairs");
  if (need_isolated)
    throw DataError("label_pairs: not enough isolated pairs");
  return dataset;
}

namespace {

void load_benchmark_file(const std::string& path, const std::string& split,
                         KuPairDataset& dataset) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open benchmark file: " + path);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Records may be comma or whitespace separated.
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    std::string a, b, label;
    if (!(row >> a)) continue;        // blank line
    if (a.starts_with('#')) continue;  // comment
    if (!(row >> b >> label))
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 'id_a id_b label'");
    try {
      dataset.pairs.push_back(
          {std::stoll(a), std::stoll(b), label_from_string(label), split, {}});
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

KuPairDataset load_benchmark(const std::string& train_file,
                             const std::string& test_file) {
  KuPairDataset dataset;
  load_benchmark_file(train_file, "train", dataset);
  load_benchmark_file(test_file, "test", dataset);
  return dataset;
}

void featurize(KuPairDataset& dataset, const TextIndex& texts,
               const embed::EmbeddingModel& model, embed::PairMode mode) {
  std::vector<std::int64_t> missing;
  for (const auto& p : dataset.pairs) {
    if (!texts.count(p.a)) missing.push_back(p.a);
    if (!texts.count(p.b)) missing.push_back(p.b);
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    std::ostringstream msg;
    msg << "featurize: missing unit text for ids:";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i)
      msg << " " << missing[i];
    if (missing.size() > 20) msg << " ... (" << missing.size() << " total)";
    throw DataError(msg.str());
  }
  for (auto& p : dataset.pairs)
    p.features = embed::pair_features(model, texts.at(p.a), texts.at(p.b), mode);
  dataset.feature_dim =
      dataset.pairs.empty() ? 0 : static_cast<int>(dataset.pairs[0].features.size());
}

void save_jsonl(const KuPairDataset& dataset, std::ostream& out) {
  for (const auto& p : dataset.pairs) {
    nlohmann::json j;
    j["a"] = p.a;
    j["b"] = p.b;
    j["label"] = to_string(p.label);
    if (!p.split.empty()) j["split"] = p.split;
    if (!p.features.empty()) j["features"] = p.features;
    out << j.dump() << "\n";
  }
}

KuPairDataset load_jsonl(std::istream& in) {
  KuPairDataset dataset;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      KuPair p;
      p.a = j.at("a").get<std::int64_t>();
      p.b = j.at("b").get<std::int64_t>();
      p.label = label_from_string(j.at("label").get<std::string>());
      if (j.contains("split")) p.split = j["split"].get<std::string>();
      if (j.contains("features"))
        p.features = j["features"].get<std::vector<double>>();
      dataset.pairs.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("dataset line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  for (const auto& p : dataset.pairs) {
    if (p.features.empty()) continue;
    if (dataset.feature_dim == 0)
      dataset.feature_dim = static_cast<int>(p.features.size());
    else if (dataset.feature_dim != static_cast<int>(p.features.size()))
      throw DataError("dataset has mixed feature dimensionality");
  }
  return dataset;
}

void save_units_jsonl(const std::vector<KnowledgeUnit>& units,
                      std::ostream& out) {
  for (const auto& u : units) {
    nlohmann::json j;
    j["id"] = u.id;
    j["title"] = u.title;
    j["body"] = u.body;
    j["answers"] = u.answers;
    j["tags"] = u.tags;
    out << j.dump() << "\n";
  }
}

std::vector<KnowledgeUnit> load_units_jsonl(std::istream& in) {
  std::vector<KnowledgeUnit> units;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      KnowledgeUnit u;
      u.id = j.at("id").get<std::int64_t>();
      u.title = j.value("title", "");
      u.body = j.value("body", "");
      if (j.contains("answers"))
        u.answers = j["answers"].get<std::vector<std::string>>();
      u.tags = j.value("tags", "");
      units.push_back(std::move(u));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("units line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return units;
}

std::string summary(const KuPairDataset& dataset) {
  std::ostringstream out;
  auto names = class_names();
  for (const std::string split : {"train", "tune", "test", ""}) {
    auto counts = dataset.class_counts(split);
    std::size_t total = 0;
    for (auto c : counts) total += c;
    if (split.empty())
      out << "all splits";
    else
      out << split;
    out << ": " << total << " pairs";
    if (total) {
      out << " (";
      for (int i = 0; i < kNumClasses; ++i) {
        if (i) out << ", ";
        out << names[std::size_t(i)] << "=" << counts[std::size_t(i)];
      }
      out << ")";
      if (dataset.balanced(split)) out << " [balanced]";
    }
    out << "\n";
  }
  if (dataset.feature_dim)
    out << "features: " << dataset.feature_dim << " per pair\n";
  else
    out << "features: none\n";
  return out.str();
}

}  // namespace kupred::data
