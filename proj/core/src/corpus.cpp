#include "comprof/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "comprof/error.hpp"

namespace comprof {
namespace {

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find('\t', start);
    fields.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::int64_t parse_int(const std::string& text, const std::string& file, std::size_t line) {
  try {
    std::size_t used = 0;
    const long long value = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ParseError(file, line, "expected an integer timestamp, got '" + text + "'");
  }
}

std::string json_id(const nlohmann::json& obj, const char* key, const std::string& file,
                    std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(file, line, std::string("missing field '") + key + "'");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw ParseError(file, line, std::string("field '") + key + "' must be a string or integer");
}

template <typename Offsets, typename Items>
std::span<const typename Items::value_type> csr_row(const Offsets& offsets, const Items& items,
                                                    std::size_t row) {
  return {items.data() + offsets[row], offsets[row + 1] - offsets[row]};
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary

WordId Vocabulary::add(const std::string& word) {
  const auto [it, inserted] = index_.try_emplace(word, static_cast<WordId>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

std::optional<WordId> Vocabulary::find(const std::string& word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Bucket TimeBuckets::bucket_of(std::int64_t timestamp) const {
  return static_cast<Bucket>(floor_div(timestamp - origin, granularity));
}

// ---------------------------------------------------------------------------
// SocialGraph

std::optional<UserId> SocialGraph::find_user(const std::string& name) const {
  const auto it = user_index_.find(name);
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<DocId> SocialGraph::find_document(const std::string& name) const {
  const auto it = doc_index_.find(name);
  if (it == doc_index_.end()) return std::nullopt;
  return it->second;
}

std::span<const DocId> SocialGraph::documents_of(UserId u) const {
  return csr_row(user_doc_offsets_, user_docs_, u);
}

std::span<const EdgeId> SocialGraph::friendship_edges_of(UserId u) const {
  return csr_row(user_edge_offsets_, user_edges_, u);
}

std::span<const EdgeId> SocialGraph::diffusion_edges_of(DocId d) const {
  return csr_row(doc_edge_offsets_, doc_edges_, d);
}

std::size_t SocialGraph::diffusion_degree(UserId u) const {
  std::size_t total = 0;
  for (DocId d : documents_of(u)) total += diffusion_edges_of(d).size();
  return total;
}

bool SocialGraph::has_diffusion(DocId src, DocId dst) const {
  return std::binary_search(diffusion_keys_.begin(), diffusion_keys_.end(), pair_key(src, dst));
}

bool SocialGraph::operator==(const SocialGraph& other) const {
  return user_names_ == other.user_names_ && documents_ == other.documents_ &&
         friendships_ == other.friendships_ && diffusions_ == other.diffusions_ &&
         num_words_ == other.num_words_ && time_ == other.time_;
}

void SocialGraph::finalize() {
  const std::size_t users = user_names_.size();
  const std::size_t docs = documents_.size();

  user_doc_offsets_.assign(users + 1, 0);
  for (const auto& doc : documents_) ++user_doc_offsets_[doc.owner + 1];
  for (std::size_t u = 0; u < users; ++u) user_doc_offsets_[u + 1] += user_doc_offsets_[u];
  user_docs_.assign(docs, 0);
  {
    auto cursor = user_doc_offsets_;
    for (DocId d = 0; d < docs; ++d) user_docs_[cursor[documents_[d].owner]++] = d;
  }

  user_edge_offsets_.assign(users + 1, 0);
  for (const auto& e : friendships_) {
    ++user_edge_offsets_[e.src + 1];
    ++user_edge_offsets_[e.dst + 1];
  }
  for (std::size_t u = 0; u < users; ++u) user_edge_offsets_[u + 1] += user_edge_offsets_[u];
  user_edges_.assign(user_edge_offsets_.back(), 0);
  {
    auto cursor = user_edge_offsets_;
    for (EdgeId e = 0; e < friendships_.size(); ++e) {
      user_edges_[cursor[friendships_[e].src]++] = e;
      user_edges_[cursor[friendships_[e].dst]++] = e;
    }
  }

  doc_edge_offsets_.assign(docs + 1, 0);
  for (const auto& e : diffusions_) {
    ++doc_edge_offsets_[e.src + 1];
    ++doc_edge_offsets_[e.dst + 1];
  }
  for (std::size_t d = 0; d < docs; ++d) doc_edge_offsets_[d + 1] += doc_edge_offsets_[d];
  doc_edges_.assign(doc_edge_offsets_.back(), 0);
  {
    auto cursor = doc_edge_offsets_;
    for (EdgeId e = 0; e < diffusions_.size(); ++e) {
      doc_edges_[cursor[diffusions_[e].src]++] = e;
      doc_edges_[cursor[diffusions_[e].dst]++] = e;
    }
  }

  diffusion_keys_.clear();
  diffusion_keys_.reserve(diffusions_.size());
  for (const auto& e : diffusions_) diffusion_keys_.push_back(pair_key(e.src, e.dst));
  std::sort(diffusion_keys_.begin(), diffusion_keys_.end());

  num_tokens_ = 0;
  for (const auto& doc : documents_) num_tokens_ += doc.tokens.size();
}

// ---------------------------------------------------------------------------
// GraphBuilder

UserId GraphBuilder::add_user(const std::string& name) {
  const auto id = static_cast<UserId>(graph_.user_names_.size());
  if (!graph_.user_index_.try_emplace(name, id).second) throw Error("duplicate user id " + name);
  graph_.user_names_.push_back(name);
  return id;
}

DocId GraphBuilder::add_document(const std::string& name, UserId owner, std::vector<WordId> tokens,
                                 std::int64_t timestamp) {
  if (owner >= graph_.user_names_.size()) {
    throw Error("document " + name + " references unknown user " + std::to_string(owner));
  }
  const auto id = static_cast<DocId>(graph_.documents_.size());
  if (!graph_.doc_index_.try_emplace(name, id).second) throw Error("duplicate document id " + name);
  graph_.documents_.push_back(Document{name, owner, std::move(tokens), timestamp, 0});
  return id;
}

bool GraphBuilder::add_friendship(UserId src, UserId dst) {
  const auto users = graph_.user_names_.size();
  if (src >= users) throw Error("friendship references unknown user " + std::to_string(src));
  if (dst >= users) throw Error("friendship references unknown user " + std::to_string(dst));
  if (src == dst) throw Error("self-loop friendship on user " + graph_.user_names_[src]);
  if (!friendship_keys_.try_emplace(pair_key(src, dst), true).second) return false;
  graph_.friendships_.push_back({src, dst});
  return true;
}

bool GraphBuilder::add_diffusion(DocId src, DocId dst, std::int64_t timestamp) {
  const auto docs = graph_.documents_.size();
  if (src >= docs) throw Error("diffusion references unknown document " + std::to_string(src));
  if (dst >= docs) throw Error("diffusion references unknown document " + std::to_string(dst));
  if (src == dst) throw Error("diffusion from document " + graph_.documents_[src].name + " to itself");
  if (!diffusion_keys_.try_emplace(pair_key(src, dst), true).second) return false;
  graph_.diffusions_.push_back({src, dst, timestamp, 0});
  return true;
}

SocialGraph GraphBuilder::build(std::size_t num_words, std::int64_t granularity,
                                std::optional<std::int64_t> origin) {
  if (granularity <= 0) throw Error("time granularity must be positive");
  for (const auto& doc : graph_.documents_) {
    for (WordId w : doc.tokens) {
      if (w >= num_words) {
        throw Error("document " + doc.name + " has word id " + std::to_string(w) +
                    " outside a vocabulary of " + std::to_string(num_words));
      }
    }
  }
  SocialGraph graph = std::move(graph_);
  graph_ = SocialGraph{};
  friendship_keys_.clear();
  diffusion_keys_.clear();

  graph.num_words_ = num_words;
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  for (const auto& doc : graph.documents_) lo = std::min(lo, doc.timestamp);
  for (const auto& e : graph.diffusions_) lo = std::min(lo, e.timestamp);
  if (lo == std::numeric_limits<std::int64_t>::max()) lo = 0;
  graph.time_.origin = origin.value_or(lo);
  graph.time_.granularity = granularity;
  Bucket hi = 0;
  for (auto& doc : graph.documents_) {
    doc.bucket = graph.time_.bucket_of(doc.timestamp);
    if (doc.bucket < 0) throw Error("document " + doc.name + " precedes the time origin");
    hi = std::max(hi, doc.bucket);
  }
  for (auto& e : graph.diffusions_) {
    e.bucket = graph.time_.bucket_of(e.timestamp);
    if (e.bucket < 0) throw Error("diffusion timestamp precedes the time origin");
    hi = std::max(hi, e.bucket);
  }
  graph.time_.count = hi + 1;
  graph.finalize();
  return graph;
}

// ---------------------------------------------------------------------------
// Ingestion

IngestPaths IngestPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "users.tsv", dir / "docs.jsonl", dir / "friendships.tsv", dir / "diffusions.tsv"};
}

IngestResult ingest(const IngestPaths& paths, const IngestOptions& options) {
  IngestResult result;
  auto& stats = result.stats;

  const Tokenizer tokenizer =
      !options.use_stopwords ? Tokenizer::without_stopwords()
      : options.stopword_file.empty()
          ? Tokenizer()
          : Tokenizer(Tokenizer::load_stopwords(options.stopword_file.string()));

  // users.tsv
  std::vector<std::string> declared_users;
  std::unordered_map<std::string, std::size_t> user_slot;
  {
    auto in = open_input(paths.users);
    const auto file = paths.users.string();
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      strip_cr(line);
      if (blank(line)) continue;
      if (line.find('\t') != std::string::npos) {
        throw ParseError(file, n, "expected a single user id per line");
      }
      if (!user_slot.try_emplace(line, declared_users.size()).second) {
        throw ParseError(file, n, "duplicate user id " + line);
      }
      declared_users.push_back(line);
    }
  }

  // docs.jsonl
  struct RawDoc {
    std::string name;
    std::size_t user_slot;
    std::vector<std::string> tokens;
    std::int64_t timestamp;
  };
  std::vector<RawDoc> kept_docs;
  std::unordered_set<std::string> declared_docs;
  std::vector<std::size_t> docs_per_user(declared_users.size(), 0);
  {
    auto in = open_input(paths.documents);
    const auto file = paths.documents.string();
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      strip_cr(line);
      if (blank(line)) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(file, n, std::string("invalid JSON: ") + e.what());
      }
      if (!obj.is_object()) throw ParseError(file, n, "expected a JSON object");
      auto name = json_id(obj, "doc_id", file, n);
      const auto user = json_id(obj, "user_id", file, n);
      const auto ts = obj.find("timestamp");
      if (ts == obj.end() || !ts->is_number_integer()) {
        throw ParseError(file, n, "field 'timestamp' must be an integer");
      }
      const auto text = obj.find("text");
      if (text == obj.end() || !text->is_string()) {
        throw ParseError(file, n, "field 'text' must be a string");
      }
      const auto slot = user_slot.find(user);
      if (slot == user_slot.end()) {
        throw Error(file + ":" + std::to_string(n) + ": document " + name +
                    " references unknown user " + user);
      }
      if (!declared_docs.insert(name).second) throw ParseError(file, n, "duplicate doc id " + name);
      auto tokens = tokenizer.tokenize(text->get<std::string>());
      if (tokens.size() < options.min_tokens) {
        ++stats.dropped_documents;
        continue;
      }
      ++docs_per_user[slot->second];
      kept_docs.push_back({std::move(name), slot->second, std::move(tokens), ts->get<std::int64_t>()});
    }
  }

  GraphBuilder builder;
  std::vector<std::optional<UserId>> user_id(declared_users.size());
  for (std::size_t s = 0; s < declared_users.size(); ++s) {
    if (docs_per_user[s] == 0) {
      ++stats.dropped_users;
      continue;
    }
    user_id[s] = builder.add_user(declared_users[s]);
  }
  std::unordered_map<std::string, DocId> doc_id;
  for (auto& raw : kept_docs) {
    std::vector<WordId> ids;
    ids.reserve(raw.tokens.size());
    for (const auto& token : raw.tokens) ids.push_back(result.vocabulary.add(token));
    doc_id.emplace(raw.name, builder.add_document(raw.name, *user_id[raw.user_slot], std::move(ids),
                                                  raw.timestamp));
  }

  // friendships.tsv
  {
    auto in = open_input(paths.friendships);
    const auto file = paths.friendships.string();
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      strip_cr(line);
      if (blank(line)) continue;
      const auto fields = split_tabs(line);
      if (fields.size() != 2) throw ParseError(file, n, "expected 'src<TAB>dst'");
      std::optional<UserId> ends[2];
      for (int k = 0; k < 2; ++k) {
        const auto slot = user_slot.find(fields[k]);
        if (slot == user_slot.end()) {
          throw Error(file + ":" + std::to_string(n) + ": unknown user " + fields[k]);
        }
        ends[k] = user_id[slot->second];
      }
      if (!ends[0] || !ends[1]) {
        ++stats.dropped_friendships;
        continue;
      }
      if (*ends[0] == *ends[1]) {
        ++stats.self_loops;
        continue;
      }
      if (!builder.add_friendship(*ends[0], *ends[1])) ++stats.duplicate_edges;
    }
  }

  // diffusions.tsv
  {
    auto in = open_input(paths.diffusions);
    const auto file = paths.diffusions.string();
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      strip_cr(line);
      if (blank(line)) continue;
      const auto fields = split_tabs(line);
      if (fields.size() != 3) throw ParseError(file, n, "expected 'src_doc<TAB>dst_doc<TAB>timestamp'");
      const auto ts = parse_int(fields[2], file, n);
      std::optional<DocId> ends[2];
      for (int k = 0; k < 2; ++k) {
        if (!declared_docs.contains(fields[k])) {
          throw Error(file + ":" + std::to_string(n) + ": unknown document " + fields[k]);
        }
        const auto it = doc_id.find(fields[k]);
        if (it != doc_id.end()) ends[k] = it->second;
      }
      if (!ends[0] || !ends[1]) {
        ++stats.dropped_diffusions;
        continue;
      }
      if (*ends[0] == *ends[1]) {
        ++stats.self_loops;
        continue;
      }
      if (!builder.add_diffusion(*ends[0], *ends[1], ts)) ++stats.duplicate_edges;
    }
  }

  result.graph = builder.build(result.vocabulary.size(), options.granularity);
  return result;
}

void write_graph(const std::filesystem::path& dir, const SocialGraph& graph,
                 const Vocabulary& vocabulary) {
  std::filesystem::create_directories(dir);
  const auto paths = IngestPaths::in_directory(dir);
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw Error("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(paths.users);
    for (UserId u = 0; u < graph.num_users(); ++u) out << graph.user_name(u) << '\n';
  }
  {
    auto out = open(paths.documents);
    for (const auto& doc : graph.documents()) {
      std::string text;
      for (WordId w : doc.tokens) {
        if (!text.empty()) text.push_back(' ');
        text += vocabulary.word(w);
      }
      nlohmann::ordered_json obj;
      obj["doc_id"] = doc.name;
      obj["user_id"] = graph.user_name(doc.owner);
      obj["timestamp"] = doc.timestamp;
      obj["text"] = text;
      out << obj.dump() << '\n';
    }
  }
  {
    auto out = open(paths.friendships);
    for (const auto& e : graph.friendships()) {
      out << graph.user_name(e.src) << '\t' << graph.user_name(e.dst) << '\n';
    }
  }
  {
    auto out = open(paths.diffusions);
    for (const auto& e : graph.diffusions()) {
      out << graph.document(e.src).name << '\t' << graph.document(e.dst).name << '\t' << e.timestamp
          << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Features

PairFeatures::PairFeatures(const SocialGraph& graph)
    : popularity_(graph.num_users(), 0.0), activeness_(graph.num_users(), 0.0) {
  std::vector<std::size_t> followers(graph.num_users(), 0), followees(graph.num_users(), 0);
  for (const auto& e : graph.friendships()) {
    ++followees[e.src];
    ++followers[e.dst];
  }
  std::vector<char> diffusing(graph.num_documents(), 0);
  for (const auto& e : graph.diffusions()) diffusing[e.src] = 1;
  for (UserId u = 0; u < graph.num_users(); ++u) {
    popularity_[u] = static_cast<double>(followers[u]) / static_cast<double>(std::max<std::size_t>(followees[u], 1));
    std::size_t active = 0;
    const auto docs = graph.documents_of(u);
    for (DocId d : docs) active += diffusing[d];
    activeness_[u] = static_cast<double>(active) / static_cast<double>(std::max<std::size_t>(docs.size(), 1));
  }
}

PairFeatures::PairFeatures(std::vector<double> popularity, std::vector<double> activeness)
    : popularity_(std::move(popularity)), activeness_(std::move(activeness)) {
  if (popularity_.size() != activeness_.size()) throw Error("feature vectors differ in length");
}

PairFeatures::Vector PairFeatures::pair(UserId u, UserId v) const {
  return {popularity_.at(u), activeness_.at(u), popularity_.at(v), activeness_.at(v)};
}

// ---------------------------------------------------------------------------
// Topic popularity

PopularityTransform parse_popularity_transform(const std::string& name) {
  if (name == "raw") return PopularityTransform::kRaw;
  if (name == "log1p") return PopularityTransform::kLog1p;
  if (name == "log1p-minmax") return PopularityTransform::kLog1pMinMax;
  throw Error("unknown popularity transform '" + name + "' (raw, log1p, log1p-minmax)");
}

std::string to_string(PopularityTransform transform) {
  switch (transform) {
    case PopularityTransform::kRaw: return "raw";
    case PopularityTransform::kLog1p: return "log1p";
    case PopularityTransform::kLog1pMinMax: return "log1p-minmax";
  }
  return "log1p-minmax";
}

TopicPopularity::TopicPopularity(std::size_t topics, Bucket buckets, PopularityTransform transform)
    : topics_(topics),
      buckets_(buckets),
      transform_(transform),
      counts_(topics * static_cast<std::size_t>(std::max<Bucket>(buckets, 0)), 0),
      scores_(counts_.size(), 0.0) {}

void TopicPopularity::add(std::uint32_t topic, Bucket bucket, std::int64_t delta) {
  counts_.at(topic * static_cast<std::size_t>(buckets_) + static_cast<std::size_t>(bucket)) += delta;
}

std::int64_t TopicPopularity::count(std::uint32_t topic, Bucket bucket) const {
  if (topic >= topics_ || bucket < 0 || bucket >= buckets_) return 0;
  return counts_[topic * static_cast<std::size_t>(buckets_) + static_cast<std::size_t>(bucket)];
}

double TopicPopularity::score(std::uint32_t topic, Bucket bucket) const {
  if (topic >= topics_ || bucket < 0 || bucket >= buckets_) return 0.0;
  return scores_[topic * static_cast<std::size_t>(buckets_) + static_cast<std::size_t>(bucket)];
}

void TopicPopularity::refresh() {
  const auto stride = static_cast<std::size_t>(buckets_);
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    const auto raw = static_cast<double>(counts_[i]);
    scores_[i] = transform_ == PopularityTransform::kRaw ? raw : std::log1p(raw);
  }
  if (transform_ != PopularityTransform::kLog1pMinMax) return;
  for (std::size_t t = 0; t < stride; ++t) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t z = 0; z < topics_; ++z) {
      lo = std::min(lo, scores_[z * stride + t]);
      hi = std::max(hi, scores_[z * stride + t]);
    }
    for (std::size_t z = 0; z < topics_; ++z) {
      auto& s = scores_[z * stride + t];
      s = hi > lo ? (s - lo) / (hi - lo) : 0.0;
    }
  }
}

TopicPopularity topic_popularity(std::span<const std::uint32_t> doc_topics, std::size_t topics,
                                 const SocialGraph& graph, PopularityTransform transform) {
  if (doc_topics.size() != graph.num_documents()) {
    throw Error("topic assignment count does not match document count");
  }
  TopicPopularity table(topics, graph.num_buckets(), transform);
  for (DocId d = 0; d < graph.num_documents(); ++d) {
    table.add(doc_topics[d], graph.document(d).bucket);
  }
  table.refresh();
  return table;
}

}  // namespace comprof
