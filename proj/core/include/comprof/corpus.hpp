#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "comprof/tokenizer.hpp"
#include "comprof/types.hpp"

namespace comprof {

/// Dense word ids 0..size()-1 in order of first appearance.
class Vocabulary {
 public:
  WordId add(const std::string& word);
  std::optional<WordId> find(const std::string& word) const;
  const std::string& word(WordId id) const { return words_.at(id); }
  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  std::unordered_map<std::string, WordId> index_;
  std::vector<std::string> words_;
};

struct Document {
  std::string name;
  UserId owner = 0;
  std::vector<WordId> tokens;
  std::int64_t timestamp = 0;
  Bucket bucket = 0;

  bool operator==(const Document&) const = default;
};

/// Directed: src follows (or co-authors with) dst.
struct FriendshipEdge {
  UserId src = 0;
  UserId dst = 0;
  bool operator==(const FriendshipEdge&) const = default;
};

/// Directed: document src diffuses (retweets / cites) document dst.
struct DiffusionEdge {
  DocId src = 0;
  DocId dst = 0;
  std::int64_t timestamp = 0;
  Bucket bucket = 0;
  bool operator==(const DiffusionEdge&) const = default;
};

/// Maps raw timestamps onto dense integer buckets.
struct TimeBuckets {
  std::int64_t origin = 0;
  std::int64_t granularity = 1;
  Bucket count = 1;

  Bucket bucket_of(std::int64_t timestamp) const;
  bool operator==(const TimeBuckets&) const = default;
};

class GraphBuilder;

/// Users, documents, friendship links and timestamped diffusion links.
/// Immutable once built; documents keep their insertion order and are grouped
/// per owner through an index.
class SocialGraph {
 public:
  std::size_t num_users() const noexcept { return user_names_.size(); }
  std::size_t num_documents() const noexcept { return documents_.size(); }
  std::size_t num_words() const noexcept { return num_words_; }
  std::size_t num_tokens() const noexcept { return num_tokens_; }
  std::size_t num_friendships() const noexcept { return friendships_.size(); }
  std::size_t num_diffusions() const noexcept { return diffusions_.size(); }
  Bucket num_buckets() const noexcept { return time_.count; }
  const TimeBuckets& time() const noexcept { return time_; }

  const std::string& user_name(UserId u) const { return user_names_.at(u); }
  std::optional<UserId> find_user(const std::string& name) const;
  std::optional<DocId> find_document(const std::string& name) const;

  const Document& document(DocId d) const { return documents_[d]; }
  std::span<const Document> documents() const noexcept { return documents_; }
  std::span<const DocId> documents_of(UserId u) const;

  std::span<const FriendshipEdge> friendships() const noexcept { return friendships_; }
  std::span<const DiffusionEdge> diffusions() const noexcept { return diffusions_; }

  /// Friendship edges with u at either end (self loops never occur).
  std::span<const EdgeId> friendship_edges_of(UserId u) const;
  /// Diffusion edges with d at either end.
  std::span<const EdgeId> diffusion_edges_of(DocId d) const;
  /// Diffusion edges touching any document of u.
  std::size_t diffusion_degree(UserId u) const;

  bool has_diffusion(DocId src, DocId dst) const;

  bool operator==(const SocialGraph& other) const;

 private:
  friend class GraphBuilder;
  void finalize();

  std::vector<std::string> user_names_;
  std::vector<Document> documents_;
  std::vector<FriendshipEdge> friendships_;
  std::vector<DiffusionEdge> diffusions_;
  std::size_t num_words_ = 0;
  std::size_t num_tokens_ = 0;
  TimeBuckets time_;

  std::unordered_map<std::string, UserId> user_index_;
  std::unordered_map<std::string, DocId> doc_index_;
  std::vector<std::uint32_t> user_doc_offsets_;
  std::vector<DocId> user_docs_;
  std::vector<std::uint32_t> user_edge_offsets_;
  std::vector<EdgeId> user_edges_;
  std::vector<std::uint32_t> doc_edge_offsets_;
  std::vector<EdgeId> doc_edges_;
  std::vector<std::uint64_t> diffusion_keys_;  // sorted src<<32|dst
};

/// Validating builder. Throws comprof::Error on dangling ids, self loops or
/// duplicate names.
class GraphBuilder {
 public:
  UserId add_user(const std::string& name);
  DocId add_document(const std::string& name, UserId owner, std::vector<WordId> tokens,
                     std::int64_t timestamp);
  /// Returns false when the edge already exists.
  bool add_friendship(UserId src, UserId dst);
  bool add_diffusion(DocId src, DocId dst, std::int64_t timestamp);

  std::size_t num_users() const noexcept { return graph_.user_names_.size(); }
  std::size_t num_documents() const noexcept { return graph_.documents_.size(); }

  /// Buckets are floor((ts - origin) / granularity) with origin the smallest
  /// timestamp seen (or `origin` when given).
  SocialGraph build(std::size_t num_words, std::int64_t granularity = 1,
                    std::optional<std::int64_t> origin = std::nullopt);

 private:
  SocialGraph graph_;
  std::unordered_map<std::uint64_t, bool> friendship_keys_;
  std::unordered_map<std::uint64_t, bool> diffusion_keys_;
};

struct IngestPaths {
  std::filesystem::path users;
  std::filesystem::path documents;
  std::filesystem::path friendships;
  std::filesystem::path diffusions;

  /// users.tsv, docs.jsonl, friendships.tsv, diffusions.tsv inside dir.
  static IngestPaths in_directory(const std::filesystem::path& dir);
};

struct IngestOptions {
  std::int64_t granularity = 86400;
  std::size_t min_tokens = 2;
  bool use_stopwords = true;
  std::filesystem::path stopword_file;  // empty: built-in list
};

struct IngestStats {
  std::size_t dropped_documents = 0;
  std::size_t dropped_users = 0;
  std::size_t dropped_friendships = 0;
  std::size_t dropped_diffusions = 0;
  std::size_t duplicate_edges = 0;
  std::size_t self_loops = 0;
};

struct IngestResult {
  SocialGraph graph;
  Vocabulary vocabulary;
  IngestStats stats;
};

/// Reads the four input files. Documents with fewer than min_tokens tokens
/// are dropped, then users left without documents, then any edge touching a
/// dropped user or document. Malformed rows raise ParseError; ids never
/// declared in the inputs raise Error naming the id.
IngestResult ingest(const IngestPaths& paths, const IngestOptions& options = {});

/// Writes the graph back in the ingestion format. Re-ingesting the output
/// with the same granularity reproduces graph and vocabulary exactly.
void write_graph(const std::filesystem::path& dir, const SocialGraph& graph,
                 const Vocabulary& vocabulary);

/// Per-user popularity (followers / followees) and activeness (diffusing
/// documents / authored documents). Zero denominators are floored at 1.
class PairFeatures {
 public:
  static constexpr std::size_t kDim = 4;
  using Vector = std::array<double, kDim>;

  explicit PairFeatures(const SocialGraph& graph);
  PairFeatures(std::vector<double> popularity, std::vector<double> activeness);

  double popularity(UserId u) const { return popularity_.at(u); }
  double activeness(UserId u) const { return activeness_.at(u); }
  /// (popularity_u, activeness_u, popularity_v, activeness_v).
  Vector pair(UserId u, UserId v) const;
  std::size_t num_users() const noexcept { return popularity_.size(); }

 private:
  std::vector<double> popularity_;
  std::vector<double> activeness_;
};

enum class PopularityTransform { kRaw, kLog1p, kLog1pMinMax };

PopularityTransform parse_popularity_transform(const std::string& name);
std::string to_string(PopularityTransform transform);

/// Document counts per (topic, time bucket) and the additive popularity score
/// derived from them.
class TopicPopularity {
 public:
  TopicPopularity() = default;
  TopicPopularity(std::size_t topics, Bucket buckets,
                  PopularityTransform transform = PopularityTransform::kLog1pMinMax);

  void add(std::uint32_t topic, Bucket bucket, std::int64_t delta = 1);
  std::int64_t count(std::uint32_t topic, Bucket bucket) const;
  /// Transformed score; 0 for buckets outside the table.
  double score(std::uint32_t topic, Bucket bucket) const;

  std::size_t topics() const noexcept { return topics_; }
  Bucket buckets() const noexcept { return buckets_; }
  PopularityTransform transform() const noexcept { return transform_; }
  const std::vector<std::int64_t>& counts() const noexcept { return counts_; }
  const std::vector<double>& scores() const noexcept { return scores_; }

  /// Rebuilds cached scores from counts; call after a batch of add().
  void refresh();

  bool operator==(const TopicPopularity&) const = default;

 private:
  std::size_t topics_ = 0;
  Bucket buckets_ = 0;
  PopularityTransform transform_ = PopularityTransform::kLog1pMinMax;
  std::vector<std::int64_t> counts_;
  std::vector<double> scores_;
};

TopicPopularity topic_popularity(std::span<const std::uint32_t> doc_topics, std::size_t topics,
                                 const SocialGraph& graph,
                                 PopularityTransform transform = PopularityTransform::kLog1pMinMax);

}  // namespace comprof
