#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "comprof/corpus.hpp"
#include "comprof/model.hpp"

namespace comprof {

inline constexpr int kSchemaVersion = 1;

/// Word ids of the tokens found in the vocabulary; the rest go to `missing`.
std::vector<WordId> lookup_tokens(const Vocabulary& vocabulary, std::span<const std::string> tokens,
                                  std::vector<std::string>* missing = nullptr);

struct TopicPosterior {
  std::vector<double> probs;
  std::size_t skipped = 0;  // tokens outside the vocabulary
  bool all_oov = false;     // every token skipped; probs is uniform
};

/// p(z | d) proportional to (sum_c pi_vc theta_cz) prod_w phi_zw over the
/// in-vocabulary tokens (ids >= |W| are skipped).
TopicPosterior doc_topic_posterior(std::span<const WordId> tokens, UserId owner,
                                   const ModelParams& params);

/// Probability that u diffuses document `tokens` of v at bucket t: the
/// topic-posterior mixture of the per-topic link probabilities.
double predict_diffusion(const ModelParams& params, const AblationConfig& ablation,
                         const PairFeatures& features, UserId u, UserId v,
                         std::span<const WordId> tokens, Bucket t);

struct RankedCommunity {
  std::uint32_t community = 0;
  double score = 0.0;
};

struct RankedCommunities {
  std::vector<std::string> query;
  std::vector<std::string> skipped;  // out-of-vocabulary query tokens
  std::vector<RankedCommunity> results;
};

/// Scores every community by sum_z sum_c' eta[c][c'][z] theta_c'z prod_w phi_zw,
/// normalized over communities, sorted descending (ties by id), truncated
/// to k (k = 0 keeps all). Throws Error when no token is in the vocabulary.
RankedCommunities rank_communities(std::span<const std::string> query, std::size_t k,
                                   const ModelParams& params, const Vocabulary& vocabulary);

struct TopicSummary {
  std::uint32_t topic = 0;
  double weight = 0.0;
  std::vector<std::string> words;
};

struct CommunityNode {
  std::uint32_t id = 0;
  std::vector<TopicSummary> top_topics;
};

struct GraphEdge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  double weight = 0.0;
};

struct DiffusionGraphExport {
  std::optional<std::uint32_t> topic;  // nullopt: aggregated over topics
  std::vector<CommunityNode> nodes;
  std::vector<GraphEdge> edges;
  double mean_weight = 0.0;
};

/// Community-to-community diffusion strengths for one topic or summed over
/// topics. With `filter`, edges weighing strictly less than the mean over
/// all |C|^2 pairs are dropped.
DiffusionGraphExport export_diffusion_graph(const ModelParams& params, const Vocabulary& vocabulary,
                                            std::optional<std::uint32_t> topic, bool filter = true,
                                            std::size_t top_topics = 4, std::size_t top_words = 4);

/// Top-n topics of community c by theta, each with its top words by phi.
std::vector<TopicSummary> community_topics(const ModelParams& params, const Vocabulary& vocabulary,
                                           std::uint32_t c, std::size_t top_topics = 4,
                                           std::size_t top_words = 4);

nlohmann::ordered_json to_json(const RankedCommunities& ranked);
nlohmann::ordered_json to_json(const DiffusionGraphExport& graph);
/// Summary list of all communities.
nlohmann::ordered_json communities_json(const ModelParams& params, const Vocabulary& vocabulary);
/// Content profile and strongest diffusion partners of one community.
nlohmann::ordered_json community_profile_json(const ModelParams& params, const Vocabulary& vocabulary,
                                              std::uint32_t c, std::size_t partners = 4);

}  // namespace comprof
