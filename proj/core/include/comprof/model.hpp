#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "comprof/corpus.hpp"
#include "comprof/rng.hpp"

namespace comprof {

struct Hyperparams {
  std::size_t communities = 10;
  std::size_t topics = 20;
  double alpha = 0.0;  // <= 0 means 50 / topics
  double rho = 0.0;    // <= 0 means 50 / communities
  double beta = 0.1;
  std::size_t iterations = 200;     // outer EM iterations
  std::size_t nu_steps = 20;        // gradient steps on nu per M-step
  double learning_rate = 0.05;
  double negative_ratio = 1.0;      // negatives per observed diffusion edge
  std::size_t burn_in = SIZE_MAX;   // SIZE_MAX means iterations / 2
  PopularityTransform popularity_transform = PopularityTransform::kLog1pMinMax;

  double alpha_value() const { return alpha > 0 ? alpha : 50.0 / static_cast<double>(topics); }
  double rho_value() const { return rho > 0 ? rho : 50.0 / static_cast<double>(communities); }
  std::size_t burn_in_value() const { return burn_in == SIZE_MAX ? iterations / 2 : burn_in; }
  /// Throws Error naming the first bad field.
  void validate() const;
  bool operator==(const Hyperparams&) const = default;
};

/// Switches that turn the full model into its degenerate variants.
struct AblationConfig {
  bool joint = true;          // false: detect on friendship links first, then profile
  bool heterogeneity = true;  // false: diffusion links scored like friendship links
  bool individual = true;     // false: nu pinned at zero
  bool topic = true;          // false: topic popularity term dropped

  /// "full", "no-joint", "no-heterogeneity", "no-topic", "no-individual-topic",
  /// or "custom" for any other combination.
  std::string name() const;
  static AblationConfig parse(const std::string& name);
  bool operator==(const AblationConfig&) const = default;
};

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

/// eta[c][c'][z]: how strongly community c diffuses community c' on topic z.
class EtaTensor {
 public:
  EtaTensor() = default;
  EtaTensor(std::size_t communities, std::size_t topics, double fill = 0.0)
      : communities_(communities), topics_(topics), data_(communities * communities * topics, fill) {}

  static EtaTensor uniform(std::size_t communities, std::size_t topics) {
    return EtaTensor(communities, topics,
                     1.0 / static_cast<double>(communities * topics));
  }

  double& operator()(std::size_t c, std::size_t c2, std::size_t z) {
    return data_[(c * communities_ + c2) * topics_ + z];
  }
  double operator()(std::size_t c, std::size_t c2, std::size_t z) const {
    return data_[(c * communities_ + c2) * topics_ + z];
  }

  std::size_t communities() const noexcept { return communities_; }
  std::size_t topics() const noexcept { return topics_; }
  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const EtaTensor&) const = default;

 private:
  std::size_t communities_ = 0;
  std::size_t topics_ = 0;
  std::vector<double> data_;
};

using NuVector = std::array<double, PairFeatures::kDim>;

struct ModelParams {
  Matrix pi;     // users x communities
  Matrix theta;  // communities x topics
  Matrix phi;    // topics x words
  EtaTensor eta;
  NuVector nu{};
  TopicPopularity popularity;

  bool operator==(const ModelParams&) const = default;
};

// Counter updates go through atomic_ref so the parallel sweep can share the
// tables; single-threaded callers pay one locked add per update.
inline void counter_add(std::int32_t& cell, std::int32_t delta) {
  std::atomic_ref<std::int32_t>(cell).fetch_add(delta, std::memory_order_relaxed);
}
inline std::int32_t counter_get(const std::int32_t& cell) {
  return std::atomic_ref<std::int32_t>(const_cast<std::int32_t&>(cell))
      .load(std::memory_order_relaxed);
}

/// Per-document assignments, link auxiliaries and the count tables of the
/// collapsed sampler.
struct LatentState {
  std::size_t num_communities = 0;
  std::size_t num_topics = 0;
  std::size_t num_words = 0;

  std::vector<std::uint32_t> community;  // per document
  std::vector<std::uint32_t> topic;      // per document
  std::vector<double> lambda;            // per friendship edge
  std::vector<double> delta;             // per diffusion edge

  std::vector<std::int32_t> user_community;   // U x C
  std::vector<std::int32_t> user_total;       // U
  std::vector<std::int32_t> community_topic;  // C x Z
  std::vector<std::int32_t> community_total;  // C
  std::vector<std::int32_t> topic_word;       // Z x W
  std::vector<std::int32_t> topic_total;      // Z

  /// Uniformly random assignments, auxiliaries at 0.25, counters built.
  static LatentState random(const SocialGraph& graph, std::size_t communities, std::size_t topics,
                            Rng& rng);
  /// Counters rebuilt from the given assignments.
  static LatentState from_assignments(const SocialGraph& graph, std::size_t communities,
                                      std::size_t topics, std::vector<std::uint32_t> community,
                                      std::vector<std::uint32_t> topic, std::vector<double> lambda,
                                      std::vector<double> delta);

  /// Removes document d from the user/community counters and, when `words`
  /// is set, from the topic-word counters.
  void remove(const SocialGraph& graph, DocId d, bool words);
  /// Inserts document d with (c, z); the inverse of remove.
  void add(const SocialGraph& graph, DocId d, std::uint32_t c, std::uint32_t z, bool words);

  /// Fresh copy with every counter recomputed from the assignments.
  LatentState recount(const SocialGraph& graph) const;
  bool counters_equal(const LatentState& other) const;

  std::int32_t n_uc(UserId u, std::size_t c) const { return counter_get(user_community[u * num_communities + c]); }
  std::int32_t n_cz(std::size_t c, std::size_t z) const { return counter_get(community_topic[c * num_topics + z]); }
  std::int32_t n_c(std::size_t c) const { return counter_get(community_total[c]); }
  std::int32_t n_zw(std::size_t z, WordId w) const { return counter_get(topic_word[z * num_words + w]); }
  std::int32_t n_z(std::size_t z) const { return counter_get(topic_total[z]); }

  bool operator==(const LatentState&) const = default;
};

/// Smoothed estimates (n + prior) / (total + dim * prior); rows sum to one.
Matrix estimate_pi(const LatentState& state, const SocialGraph& graph, const Hyperparams& hyper);
Matrix estimate_theta(const LatentState& state, const Hyperparams& hyper);
Matrix estimate_phi(const LatentState& state, const Hyperparams& hyper);

/// M-step aggregation: histogram of (c_src, c_dst, z_src) over diffusion
/// edges, plus 0.01 per cell, each c slice normalized to sum to one.
EtaTensor estimate_eta(const LatentState& state, const SocialGraph& graph);

double dot(std::span<const double> a, std::span<const double> b);

/// sigma(pi_u . pi_v).
double friendship_prob(std::span<const double> pi_u, std::span<const double> pi_v);

/// Everything the diffusion logit needs for one edge besides eta and nu.
struct DiffusionContext {
  std::uint32_t topic = 0;
  std::vector<double> cbar;  // C*C, cbar[c*C+c'] = pi_uc pi_vc' theta_cz theta_c'z
  double popularity = 0.0;
  PairFeatures::Vector features{};

  static DiffusionContext make(std::span<const double> pi_u, std::span<const double> pi_v,
                               const Matrix& theta, std::uint32_t topic, double popularity,
                               const PairFeatures::Vector& features);
};

/// cbar . eta[.,.,z] + popularity + nu . f.
double diffusion_logit(const DiffusionContext& ctx, const EtaTensor& eta, const NuVector& nu);

/// sum_c sum_c' eta[c][c'][z] a_c b_c' with a_c = theta_cz pi_uc, b = theta_c'z pi_vc'.
double community_term(std::span<const double> a, std::span<const double> b, const EtaTensor& eta,
                      std::uint32_t z);

}  // namespace comprof
