#include "comprof/model.hpp"

#include <cmath>

#include "comprof/error.hpp"

namespace comprof {

void Hyperparams::validate() const {
  if (communities == 0) throw Error("communities must be positive");
  if (topics == 0) throw Error("topics must be positive");
  if (!(alpha_value() > 0)) throw Error("alpha must be positive");
  if (!(rho_value() > 0)) throw Error("rho must be positive");
  if (!(beta > 0)) throw Error("beta must be positive");
  if (iterations == 0) throw Error("iterations must be at least 1");
  if (nu_steps == 0) throw Error("nu_steps must be at least 1");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
    throw Error("learning_rate must be positive");
  }
  if (!(negative_ratio >= 0) || !std::isfinite(negative_ratio)) {
    throw Error("negative_ratio must be non-negative");
  }
  if (burn_in != SIZE_MAX && burn_in >= iterations) {
    throw Error("burn_in must be smaller than iterations");
  }
}

std::string AblationConfig::name() const {
  if (joint && heterogeneity && individual && topic) return "full";
  if (!joint && heterogeneity && individual && topic) return "no-joint";
  if (joint && !heterogeneity && individual && topic) return "no-heterogeneity";
  if (joint && heterogeneity && individual && !topic) return "no-topic";
  if (joint && heterogeneity && !individual && !topic) return "no-individual-topic";
  return "custom";
}

AblationConfig AblationConfig::parse(const std::string& name) {
  AblationConfig config;
  if (name == "full") return config;
  if (name == "no-joint") {
    config.joint = false;
  } else if (name == "no-heterogeneity") {
    config.heterogeneity = false;
  } else if (name == "no-topic") {
    config.topic = false;
  } else if (name == "no-individual-topic") {
    config.individual = false;
    config.topic = false;
  } else {
    throw Error("unknown ablation '" + name +
                "' (full, no-joint, no-heterogeneity, no-topic, no-individual-topic)");
  }
  return config;
}

// ---------------------------------------------------------------------------

LatentState LatentState::random(const SocialGraph& graph, std::size_t communities,
                                std::size_t topics, Rng& rng) {
  std::vector<std::uint32_t> c(graph.num_documents()), z(graph.num_documents());
  for (DocId d = 0; d < graph.num_documents(); ++d) {
    c[d] = static_cast<std::uint32_t>(rng.below(communities));
    z[d] = static_cast<std::uint32_t>(rng.below(topics));
  }
  return from_assignments(graph, communities, topics, std::move(c), std::move(z),
                          std::vector<double>(graph.num_friendships(), 0.25),
                          std::vector<double>(graph.num_diffusions(), 0.25));
}

LatentState LatentState::from_assignments(const SocialGraph& graph, std::size_t communities,
                                          std::size_t topics, std::vector<std::uint32_t> community,
                                          std::vector<std::uint32_t> topic,
                                          std::vector<double> lambda, std::vector<double> delta) {
  if (community.size() != graph.num_documents() || topic.size() != graph.num_documents()) {
    throw Error("assignment vectors do not match the document count");
  }
  if (lambda.size() != graph.num_friendships() || delta.size() != graph.num_diffusions()) {
    throw Error("auxiliary vectors do not match the edge counts");
  }
  LatentState s;
  s.num_communities = communities;
  s.num_topics = topics;
  s.num_words = graph.num_words();
  s.community = std::move(community);
  s.topic = std::move(topic);
  s.lambda = std::move(lambda);
  s.delta = std::move(delta);
  s.user_community.assign(graph.num_users() * communities, 0);
  s.user_total.assign(graph.num_users(), 0);
  s.community_topic.assign(communities * topics, 0);
  s.community_total.assign(communities, 0);
  s.topic_word.assign(topics * graph.num_words(), 0);
  s.topic_total.assign(topics, 0);
  for (DocId d = 0; d < graph.num_documents(); ++d) {
    if (s.community[d] >= communities || s.topic[d] >= topics) {
      throw Error("assignment of document " + std::to_string(d) + " out of range");
    }
    s.add(graph, d, s.community[d], s.topic[d], true);
  }
  return s;
}

void LatentState::remove(const SocialGraph& graph, DocId d, bool words) {
  const auto& doc = graph.document(d);
  const std::uint32_t c = community[d];
  const std::uint32_t z = topic[d];
  counter_add(user_community[doc.owner * num_communities + c], -1);
  counter_add(user_total[doc.owner], -1);
  counter_add(community_topic[c * num_topics + z], -1);
  counter_add(community_total[c], -1);
  if (words) {
    for (WordId w : doc.tokens) counter_add(topic_word[z * num_words + w], -1);
    counter_add(topic_total[z], -static_cast<std::int32_t>(doc.tokens.size()));
  }
}

void LatentState::add(const SocialGraph& graph, DocId d, std::uint32_t c, std::uint32_t z,
                      bool words) {
  const auto& doc = graph.document(d);
  community[d] = c;
  topic[d] = z;
  counter_add(user_community[doc.owner * num_communities + c], 1);
  counter_add(user_total[doc.owner], 1);
  counter_add(community_topic[c * num_topics + z], 1);
  counter_add(community_total[c], 1);
  if (words) {
    for (WordId w : doc.tokens) counter_add(topic_word[z * num_words + w], 1);
    counter_add(topic_total[z], static_cast<std::int32_t>(doc.tokens.size()));
  }
}

LatentState LatentState::recount(const SocialGraph& graph) const {
  return from_assignments(graph, num_communities, num_topics, community, topic, lambda, delta);
}

bool LatentState::counters_equal(const LatentState& other) const {
  return user_community == other.user_community && user_total == other.user_total &&
         community_topic == other.community_topic && community_total == other.community_total &&
         topic_word == other.topic_word && topic_total == other.topic_total;
}

// ---------------------------------------------------------------------------

Matrix estimate_pi(const LatentState& state, const SocialGraph& graph, const Hyperparams& hyper) {
  const std::size_t C = state.num_communities;
  const double rho = hyper.rho_value();
  Matrix pi(graph.num_users(), C);
  for (UserId u = 0; u < graph.num_users(); ++u) {
    const double denom = static_cast<double>(state.user_total[u]) + static_cast<double>(C) * rho;
    for (std::size_t c = 0; c < C; ++c) pi(u, c) = (state.n_uc(u, c) + rho) / denom;
  }
  return pi;
}

Matrix estimate_theta(const LatentState& state, const Hyperparams& hyper) {
  const std::size_t C = state.num_communities, Z = state.num_topics;
  const double alpha = hyper.alpha_value();
  Matrix theta(C, Z);
  for (std::size_t c = 0; c < C; ++c) {
    const double denom = state.n_c(c) + static_cast<double>(Z) * alpha;
    for (std::size_t z = 0; z < Z; ++z) theta(c, z) = (state.n_cz(c, z) + alpha) / denom;
  }
  return theta;
}

Matrix estimate_phi(const LatentState& state, const Hyperparams& hyper) {
  const std::size_t Z = state.num_topics, W = state.num_words;
  Matrix phi(Z, W);
  for (std::size_t z = 0; z < Z; ++z) {
    const double denom = state.n_z(z) + static_cast<double>(W) * hyper.beta;
    for (std::size_t w = 0; w < W; ++w) {
      phi(z, w) = (state.n_zw(z, static_cast<WordId>(w)) + hyper.beta) / denom;
    }
  }
  return phi;
}

EtaTensor estimate_eta(const LatentState& state, const SocialGraph& graph) {
  const std::size_t C = state.num_communities, Z = state.num_topics;
  EtaTensor eta(C, Z, 0.01);
  for (const auto& e : graph.diffusions()) {
    eta(state.community[e.src], state.community[e.dst], state.topic[e.src]) += 1.0;
  }
  for (std::size_t c = 0; c < C; ++c) {
    double total = 0.0;
    for (std::size_t c2 = 0; c2 < C; ++c2) {
      for (std::size_t z = 0; z < Z; ++z) total += eta(c, c2, z);
    }
    for (std::size_t c2 = 0; c2 < C; ++c2) {
      for (std::size_t z = 0; z < Z; ++z) eta(c, c2, z) /= total;
    }
  }
  return eta;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double friendship_prob(std::span<const double> pi_u, std::span<const double> pi_v) {
  return 1.0 / (1.0 + std::exp(-dot(pi_u, pi_v)));
}

DiffusionContext DiffusionContext::make(std::span<const double> pi_u, std::span<const double> pi_v,
                                        const Matrix& theta, std::uint32_t topic,
                                        double popularity, const PairFeatures::Vector& features) {
  const std::size_t C = pi_u.size();
  DiffusionContext ctx;
  ctx.topic = topic;
  ctx.cbar.resize(C * C);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t c2 = 0; c2 < C; ++c2) {
      ctx.cbar[c * C + c2] = pi_u[c] * pi_v[c2] * theta(c, topic) * theta(c2, topic);
    }
  }
  ctx.popularity = popularity;
  ctx.features = features;
  return ctx;
}

double diffusion_logit(const DiffusionContext& ctx, const EtaTensor& eta, const NuVector& nu) {
  const std::size_t C = eta.communities();
  double s = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t c2 = 0; c2 < C; ++c2) s += ctx.cbar[c * C + c2] * eta(c, c2, ctx.topic);
  }
  s += ctx.popularity;
  for (std::size_t k = 0; k < nu.size(); ++k) s += nu[k] * ctx.features[k];
  return s;
}

double community_term(std::span<const double> a, std::span<const double> b, const EtaTensor& eta,
                      std::uint32_t z) {
  const std::size_t C = a.size();
  const std::size_t Z = eta.topics();
  const double* base = eta.data().data() + z;
  double s = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    if (a[c] == 0.0) continue;
    double row = 0.0;
    const double* p = base + c * C * Z;
    for (std::size_t c2 = 0; c2 < C; ++c2) row += p[c2 * Z] * b[c2];
    s += a[c] * row;
  }
  return s;
}

}  // namespace comprof
