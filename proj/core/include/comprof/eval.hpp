#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "comprof/corpus.hpp"
#include "comprof/gibbs.hpp"
#include "comprof/model.hpp"
#include "comprof/rng.hpp"
#include "comprof/trainer.hpp"

namespace comprof {

// ---------------------------------------------------------------------------
// Metrics

/// exp(-sum log p(w | owner) / tokens) with p(w|u) = sum_c pi_uc sum_z theta_cz phi_zw.
double perplexity(const SocialGraph& graph, std::span<const DocId> docs, const Matrix& pi,
                  const Matrix& theta, const Matrix& phi);
double perplexity(const SocialGraph& graph, const Matrix& pi, const Matrix& theta, const Matrix& phi);

/// Each user's top_k communities by pi (ties to the lower id).
std::vector<std::vector<std::uint32_t>> top_communities(const Matrix& pi, std::size_t top_k);

/// Mean over non-empty communities of cut / min(vol inside, vol outside),
/// friendship links taken as undirected; a zero denominator scores 0.
double conductance(const SocialGraph& graph, const std::vector<std::vector<std::uint32_t>>& membership,
                   std::size_t communities);
double conductance(const SocialGraph& graph, const Matrix& pi, std::size_t top_k = 5);

/// P(random positive outscores random negative), ties counting one half.
double auc(std::span<const double> positives, std::span<const double> negatives);

struct RankMetrics {
  std::vector<double> map;  // index K-1
  std::vector<double> mar;
  std::vector<double> maf;
};

/// rankings[q]: community ids in ranked order; relevant[q]: users that
/// diffuse about query q; membership[u]: communities of user u.
RankMetrics rank_metrics(const std::vector<std::vector<std::uint32_t>>& rankings,
                         const std::vector<std::vector<UserId>>& relevant,
                         const std::vector<std::vector<std::uint32_t>>& membership, std::size_t k_max);

/// Normalized mutual information (arithmetic-mean normalization); 1 when
/// both labelings are constant.
double nmi(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

// ---------------------------------------------------------------------------
// Aggregation baseline

struct AggregatedProfiles {
  Matrix theta;   // communities x topics, rows normalized
  EtaTensor eta;  // 0.01 smoothing, each c slice normalized
};

/// Content and diffusion profiles aggregated from fixed memberships pi
/// (users x C) and per-document topic mixtures (documents x Z).
AggregatedProfiles aggregate_profiles(const Matrix& pi, const Matrix& doc_topics,
                                      const SocialGraph& graph);

// ---------------------------------------------------------------------------
// Brute-force collapsed joint

/// log of prod Delta(n + prior) / Delta(prior) over users, communities and
/// topics times prod sigma(logit) over every link, with hat estimates
/// recomputed from scratch for the given full assignment.
double collapsed_joint_oracle(const SocialGraph& graph, std::span<const std::uint32_t> community,
                              std::span<const std::uint32_t> topic, const Hyperparams& hyper,
                              const LinkParams& params, const PairFeatures& features,
                              const AblationConfig& ablation = {});

/// Normalized joint over all (C*Z)^D assignments; index = sum_d (c_d*Z + z_d) * (C*Z)^d.
/// Throws Error beyond max_configs.
std::vector<double> enumerate_collapsed_joint(const SocialGraph& graph, const Hyperparams& hyper,
                                              const LinkParams& params, const PairFeatures& features,
                                              const AblationConfig& ablation = {},
                                              std::size_t max_configs = 4096);

// ---------------------------------------------------------------------------
// Cross validation

/// Graph restricted to kept documents and links; users are preserved.
struct Subgraph {
  SocialGraph graph;
  std::vector<DocId> new_id;  // original doc id -> new id, or UINT32_MAX when dropped
};
Subgraph restrict_graph(const SocialGraph& graph, std::span<const char> keep_docs,
                        std::span<const char> keep_friendships, std::span<const char> keep_diffusions);

/// Fold index in [0, k) for each of n items, balanced, shuffled with rng.
std::vector<std::uint32_t> fold_assignment(std::size_t n, std::size_t k, Rng& rng);

struct EvalReport {
  std::size_t folds = 0;
  double conductance = 0.0;
  double friendship_auc = 0.0;
  double diffusion_auc = 0.0;
  double perplexity = 0.0;
  std::vector<double> map;
  std::vector<double> mar;
  std::vector<double> maf;

  void write_csv(const std::filesystem::path& path) const;
  void write_json(const std::filesystem::path& path) const;
};

struct CrossValidationOptions {
  std::size_t folds = 10;
  std::size_t evaluate_folds = 0;  // 0: all folds
  std::uint64_t seed = 7;
  std::size_t top_k = 5;           // membership rule for conductance and ranking
  std::size_t k_max = 10;
  std::size_t queries = 10;        // most frequent words among held-out diffusing documents
  double negative_ratio = 1.0;
};

/// k-fold over friendship and diffusion links: each fold retrains on the
/// remaining links and scores the held-out ones against sampled non-links.
/// Conductance and held-in perplexity use the fold model on the full graph.
EvalReport cross_validate(const SocialGraph& graph, const Vocabulary& vocabulary,
                          const TrainConfig& config, const CrossValidationOptions& options);

/// Held-out diffusion AUC of each fold only (the ablation comparison).
std::vector<double> diffusion_auc_folds(const SocialGraph& graph, const TrainConfig& config,
                                        const CrossValidationOptions& options);

struct PerplexityFold {
  double joint = 0.0;        // jointly trained profiles
  double aggregated = 0.0;   // detection first, then aggregation
};

/// k-fold over documents: held-out perplexity of the jointly trained model
/// against profiles aggregated from the no-joint variant's assignments.
std::vector<PerplexityFold> perplexity_folds(const SocialGraph& graph, const TrainConfig& config,
                                             const CrossValidationOptions& options);

}  // namespace comprof
