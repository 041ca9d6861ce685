#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "comprof/corpus.hpp"
#include "comprof/model.hpp"
#include "comprof/rng.hpp"

namespace comprof {

/// Parameters held fixed during a sweep and replaced between sweeps.
struct LinkParams {
  EtaTensor eta;
  NuVector nu{};
  TopicPopularity popularity;
};

struct SweepOptions {
  bool sample_topics = true;
  bool sample_communities = true;
  /// Include the community-topic count ratio when sampling communities.
  bool community_content_terms = true;
  /// Include diffusion-link factors in both document kernels.
  bool diffusion_terms = true;
  bool sample_links = true;
  bool compute_log_joint = true;
};

struct SweepStats {
  double seconds = 0.0;
  double document_seconds = 0.0;
  double friendship_seconds = 0.0;
  double diffusion_seconds = 0.0;
  std::size_t documents = 0;
  std::size_t friendship_edges = 0;
  std::size_t diffusion_edges = 0;
  std::size_t topic_moves = 0;      // draws that changed the topic
  std::size_t community_moves = 0;  // draws that changed the community
  double log_joint = 0.0;           // collapsed log joint after the sweep

  void merge(const SweepStats& other);
};

/// Collapsed Gibbs kernels over one graph.
///
/// The hat estimates inside link factors are evaluated on the full state with
/// the document being sampled placed at the candidate value, so each kernel
/// is the exact conditional of the collapsed joint with links marginalized
/// through their Polya-Gamma auxiliaries.
class GibbsSampler {
 public:
  /// Scratch buffers; one per thread.
  struct Workspace {
    std::vector<double> weights;
    std::vector<double> pi_u;
    std::vector<double> pi_v;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> neighbor_pi;  // friendship neighbours, row-major
    std::vector<double> base_dot;
  };

  GibbsSampler(const SocialGraph& graph, const PairFeatures& features, const Hyperparams& hyper,
               const AblationConfig& ablation);

  /// Must be called before sampling and whenever params change; keeps a
  /// reference to `params`.
  void set_params(const LinkParams& params);

  bool has_params() const noexcept { return params_ != nullptr; }
  const SocialGraph& graph() const noexcept { return graph_; }
  const Hyperparams& hyper() const noexcept { return hyper_; }
  const AblationConfig& ablation() const noexcept { return ablation_; }

  /// Normalized conditional over topics for document d. The state is left
  /// unchanged. `with_friendship` multiplies in the friendship factor, which
  /// does not depend on the topic.
  std::vector<double> topic_conditional(LatentState& state, DocId d, const SweepOptions& options = {},
                                        bool with_friendship = false) const;
  std::vector<double> community_conditional(LatentState& state, DocId d,
                                            const SweepOptions& options = {}) const;

  std::uint32_t sample_topic(LatentState& state, DocId d, Rng& rng, Workspace& ws,
                             const SweepOptions& options = {}) const;
  std::uint32_t sample_community(LatentState& state, DocId d, Rng& rng, Workspace& ws,
                                 const SweepOptions& options = {}) const;
  double sample_lambda(LatentState& state, EdgeId e, Rng& rng, Workspace& ws) const;
  double sample_delta(LatentState& state, EdgeId e, Rng& rng, Workspace& ws) const;

  /// Documents of `users` in order (topic then community for each).
  void sweep_documents(LatentState& state, std::span<const UserId> users, Rng& rng, Workspace& ws,
                       const SweepOptions& options, SweepStats& stats) const;
  /// lambda for the given friendship edges, then delta for the diffusion edges.
  void sweep_links(LatentState& state, std::span<const EdgeId> friendships,
                   std::span<const EdgeId> diffusions, Rng& rng, Workspace& ws,
                   SweepStats& stats) const;

  /// One full serial pass: users ascending, then every lambda, then every delta.
  SweepStats sweep(LatentState& state, Rng& rng, const SweepOptions& options = {}) const;

  /// Current pi-hat row of user u.
  void pi_hat(const LatentState& state, UserId u, std::span<double> out) const;
  /// Friendship logit pi_u . pi_v under the current state.
  double friendship_logit(const LatentState& state, EdgeId e, Workspace& ws) const;
  /// Diffusion logit of edge e under the current state.
  double diffusion_logit(const LatentState& state, EdgeId e, Workspace& ws) const;

  /// Collapsed log joint: Dirichlet-multinomial terms plus log sigma of every
  /// link logit under the hat estimates.
  double log_joint(const LatentState& state, const SweepOptions& options = {}) const;

 private:
  struct Overlay {
    DocId doc = std::numeric_limits<DocId>::max();
    UserId user = std::numeric_limits<UserId>::max();
    std::uint32_t community = 0;
    std::uint32_t topic = 0;
  };

  void pi_hat(const LatentState& state, UserId x, const Overlay& ov, double* out) const;
  double theta_hat(const LatentState& state, std::size_t c, std::size_t z, const Overlay& ov) const;
  double diffusion_logit(const LatentState& state, EdgeId e, const Overlay& ov, Workspace& ws) const;

  void topic_log_weights(const LatentState& state, DocId d, const SweepOptions& options,
                         bool with_friendship, Workspace& ws) const;
  void community_log_weights(const LatentState& state, DocId d, const SweepOptions& options,
                             Workspace& ws) const;

  const SocialGraph& graph_;
  const PairFeatures& features_;
  Hyperparams hyper_;
  AblationConfig ablation_;
  double alpha_;
  double rho_;
  const LinkParams* params_ = nullptr;
  std::vector<double> nu_term_;  // nu . f_uv per diffusion edge
  // Distinct words and multiplicities per document.
  std::vector<std::uint32_t> word_offsets_;
  std::vector<WordId> word_ids_;
  std::vector<std::int32_t> word_counts_;
};

/// Index of the draw from unnormalized log weights; overwrites `weights`.
std::size_t sample_log_weights(std::vector<double>& weights, Rng& rng);
/// In-place log-sum-exp normalization to probabilities.
void normalize_log_weights(std::vector<double>& weights);

}  // namespace comprof
