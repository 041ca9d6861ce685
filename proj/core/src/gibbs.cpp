#include "comprof/gibbs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "comprof/error.hpp"
#include "comprof/polya_gamma.hpp"

namespace comprof {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

void SweepStats::merge(const SweepStats& other) {
  document_seconds += other.document_seconds;
  friendship_seconds += other.friendship_seconds;
  diffusion_seconds += other.diffusion_seconds;
  documents += other.documents;
  friendship_edges += other.friendship_edges;
  diffusion_edges += other.diffusion_edges;
  topic_moves += other.topic_moves;
  community_moves += other.community_moves;
}

std::size_t sample_log_weights(std::vector<double>& weights, Rng& rng) {
  const double hi = *std::max_element(weights.begin(), weights.end());
  double total = 0.0;
  for (auto& w : weights) {
    w = std::exp(w - hi);
    total += w;
  }
  double target = rng.uniform() * total;
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    target -= weights[k];
    if (target < 0.0) return k;
  }
  return weights.size() - 1;
}

void normalize_log_weights(std::vector<double>& weights) {
  const double hi = *std::max_element(weights.begin(), weights.end());
  double total = 0.0;
  for (auto& w : weights) {
    w = std::exp(w - hi);
    total += w;
  }
  for (auto& w : weights) w /= total;
}

GibbsSampler::GibbsSampler(const SocialGraph& graph, const PairFeatures& features,
                           const Hyperparams& hyper, const AblationConfig& ablation)
    : graph_(graph),
      features_(features),
      hyper_(hyper),
      ablation_(ablation),
      alpha_(hyper.alpha_value()),
      rho_(hyper.rho_value()) {
  hyper_.validate();
  if (features.num_users() != graph.num_users()) {
    throw Error("pair features do not match the user count");
  }
  word_offsets_.assign(graph.num_documents() + 1, 0);
  std::vector<WordId> sorted;
  for (DocId d = 0; d < graph.num_documents(); ++d) {
    sorted = graph.document(d).tokens;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      if (k == 0 || sorted[k] != sorted[k - 1]) {
        word_ids_.push_back(sorted[k]);
        word_counts_.push_back(1);
      } else {
        ++word_counts_.back();
      }
    }
    word_offsets_[d + 1] = static_cast<std::uint32_t>(word_ids_.size());
  }
}

void GibbsSampler::set_params(const LinkParams& params) {
  if (params.eta.communities() != hyper_.communities || params.eta.topics() != hyper_.topics) {
    throw Error("eta dimensions do not match the sampler");
  }
  params_ = &params;
  nu_term_.assign(graph_.num_diffusions(), 0.0);
  if (!ablation_.individual) return;
  const auto edges = graph_.diffusions();
  for (EdgeId e = 0; e < edges.size(); ++e) {
    const auto f = features_.pair(graph_.document(edges[e].src).owner,
                                  graph_.document(edges[e].dst).owner);
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) s += params.nu[k] * f[k];
    nu_term_[e] = s;
  }
}

// ---------------------------------------------------------------------------
// Hat estimates

void GibbsSampler::pi_hat(const LatentState& state, UserId u, std::span<double> out) const {
  pi_hat(state, u, Overlay{}, out.data());
}

void GibbsSampler::pi_hat(const LatentState& state, UserId x, const Overlay& ov, double* out) const {
  const std::size_t C = hyper_.communities;
  const double inv = 1.0 / (static_cast<double>(graph_.documents_of(x).size()) +
                            static_cast<double>(C) * rho_);
  for (std::size_t c = 0; c < C; ++c) out[c] = (state.n_uc(x, c) + rho_) * inv;
  if (x == ov.user) out[ov.community] += inv;
}

double GibbsSampler::theta_hat(const LatentState& state, std::size_t c, std::size_t z,
                               const Overlay& ov) const {
  const bool here = ov.doc != Overlay{}.doc && c == ov.community;
  const double num = state.n_cz(c, z) + alpha_ + (here && z == ov.topic ? 1.0 : 0.0);
  const double den = state.n_c(c) + static_cast<double>(hyper_.topics) * alpha_ + (here ? 1.0 : 0.0);
  return num / den;
}

double GibbsSampler::diffusion_logit(const LatentState& state, EdgeId e, const Overlay& ov,
                                     Workspace& ws) const {
  const std::size_t C = hyper_.communities;
  const auto& edge = graph_.diffusions()[e];
  const UserId u = graph_.document(edge.src).owner;
  const UserId v = graph_.document(edge.dst).owner;
  ws.pi_u.resize(C);
  ws.pi_v.resize(C);
  pi_hat(state, u, ov, ws.pi_u.data());
  pi_hat(state, v, ov, ws.pi_v.data());
  if (!ablation_.heterogeneity) return dot(ws.pi_u, ws.pi_v);

  const std::uint32_t z = edge.src == ov.doc ? ov.topic : state.topic[edge.src];
  ws.a.resize(C);
  ws.b.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    const double t = theta_hat(state, c, z, ov);
    ws.a[c] = t * ws.pi_u[c];
    ws.b[c] = t * ws.pi_v[c];
  }
  double logit = community_term(ws.a, ws.b, params_->eta, z);
  if (ablation_.topic) logit += params_->popularity.score(z, edge.bucket);
  logit += nu_term_[e];
  return logit;
}

double GibbsSampler::diffusion_logit(const LatentState& state, EdgeId e, Workspace& ws) const {
  if (params_ == nullptr) throw Error("sampler parameters not set");
  return diffusion_logit(state, e, Overlay{}, ws);
}

double GibbsSampler::friendship_logit(const LatentState& state, EdgeId e, Workspace& ws) const {
  const std::size_t C = hyper_.communities;
  const auto& edge = graph_.friendships()[e];
  ws.pi_u.resize(C);
  ws.pi_v.resize(C);
  pi_hat(state, edge.src, Overlay{}, ws.pi_u.data());
  pi_hat(state, edge.dst, Overlay{}, ws.pi_v.data());
  return dot(ws.pi_u, ws.pi_v);
}

// ---------------------------------------------------------------------------
// Document kernels

void GibbsSampler::topic_log_weights(const LatentState& state, DocId d, const SweepOptions& options,
                                     bool with_friendship, Workspace& ws) const {
  const std::size_t C = hyper_.communities;
  const std::size_t Z = hyper_.topics;
  const double beta = hyper_.beta;
  const double w_beta = static_cast<double>(graph_.num_words()) * beta;
  const std::uint32_t c = state.community[d];
  const auto& doc = graph_.document(d);
  const double length = static_cast<double>(doc.tokens.size());
  const double den_c = std::log(state.n_c(c) + static_cast<double>(Z) * alpha_);

  auto& w = ws.weights;
  w.assign(Z, 0.0);
  for (std::size_t z = 0; z < Z; ++z) {
    double lw = std::log(state.n_cz(c, z) + alpha_) - den_c;
    for (std::uint32_t k = word_offsets_[d]; k < word_offsets_[d + 1]; ++k) {
      const double base = state.n_zw(z, word_ids_[k]) + beta;
      lw += word_counts_[k] == 1 ? std::log(base)
                                 : std::lgamma(base + word_counts_[k]) - std::lgamma(base);
    }
    const double tot = state.n_z(z) + w_beta;
    lw -= std::lgamma(tot + length) - std::lgamma(tot);
    w[z] = lw;
  }

  Overlay ov{d, doc.owner, c, 0};
  if (options.diffusion_terms) {
    for (EdgeId e : graph_.diffusion_edges_of(d)) {
      const double delta = state.delta[e];
      for (std::size_t z = 0; z < Z; ++z) {
        ov.topic = static_cast<std::uint32_t>(z);
        w[z] += log_psi(diffusion_logit(state, e, ov, ws), delta);
      }
    }
  }
  if (with_friendship) {
    std::vector<double> pu(C), pv(C);
    for (EdgeId e : graph_.friendship_edges_of(doc.owner)) {
      const auto& edge = graph_.friendships()[e];
      pi_hat(state, edge.src, ov, pu.data());
      pi_hat(state, edge.dst, ov, pv.data());
      const double term = log_psi(dot(pu, pv), state.lambda[e]);
      for (std::size_t z = 0; z < Z; ++z) w[z] += term;
    }
  }
}

void GibbsSampler::community_log_weights(const LatentState& state, DocId d,
                                         const SweepOptions& options, Workspace& ws) const {
  const std::size_t C = hyper_.communities;
  const std::size_t Z = hyper_.topics;
  const std::uint32_t z = state.topic[d];
  const auto& doc = graph_.document(d);
  const UserId u = doc.owner;

  auto& w = ws.weights;
  w.assign(C, 0.0);
  const double den_u = std::log(state.user_total[u] + static_cast<double>(C) * rho_);
  for (std::size_t c = 0; c < C; ++c) {
    double lw = std::log(state.n_uc(u, c) + rho_) - den_u;
    if (options.community_content_terms) {
      lw += std::log(state.n_cz(c, z) + alpha_) -
            std::log(state.n_c(c) + static_cast<double>(Z) * alpha_);
    }
    w[c] = lw;
  }

  // Friendship factors: pi_u moves by 1/denom in the candidate coordinate only.
  const auto fedges = graph_.friendship_edges_of(u);
  if (!fedges.empty()) {
    const double inv_u = 1.0 / (static_cast<double>(graph_.documents_of(u).size()) +
                                static_cast<double>(C) * rho_);
    ws.pi_u.resize(C);
    pi_hat(state, u, Overlay{}, ws.pi_u.data());  // n_uc excludes d here
    ws.pi_v.resize(C);
    for (EdgeId e : fedges) {
      const auto& edge = graph_.friendships()[e];
      const UserId v = edge.src == u ? edge.dst : edge.src;
      pi_hat(state, v, Overlay{}, ws.pi_v.data());
      const double base = dot(ws.pi_u, ws.pi_v);
      const double lambda = state.lambda[e];
      for (std::size_t c = 0; c < C; ++c) {
        w[c] += log_psi(base + ws.pi_v[c] * inv_u, lambda);
      }
    }
  }

  if (options.diffusion_terms) {
    Overlay ov{d, u, 0, z};
    for (EdgeId e : graph_.diffusion_edges_of(d)) {
      const double delta = state.delta[e];
      for (std::size_t c = 0; c < C; ++c) {
        ov.community = static_cast<std::uint32_t>(c);
        w[c] += log_psi(diffusion_logit(state, e, ov, ws), delta);
      }
    }
  }
}

std::vector<double> GibbsSampler::topic_conditional(LatentState& state, DocId d,
                                                    const SweepOptions& options,
                                                    bool with_friendship) const {
  if (options.diffusion_terms && params_ == nullptr) throw Error("sampler parameters not set");
  Workspace ws;
  const auto c = state.community[d], z = state.topic[d];
  state.remove(graph_, d, true);
  topic_log_weights(state, d, options, with_friendship, ws);
  state.add(graph_, d, c, z, true);
  normalize_log_weights(ws.weights);
  return ws.weights;
}

std::vector<double> GibbsSampler::community_conditional(LatentState& state, DocId d,
                                                        const SweepOptions& options) const {
  if (options.diffusion_terms && params_ == nullptr) throw Error("sampler parameters not set");
  Workspace ws;
  const auto c = state.community[d], z = state.topic[d];
  state.remove(graph_, d, false);
  community_log_weights(state, d, options, ws);
  state.add(graph_, d, c, z, false);
  normalize_log_weights(ws.weights);
  return ws.weights;
}

std::uint32_t GibbsSampler::sample_topic(LatentState& state, DocId d, Rng& rng, Workspace& ws,
                                         const SweepOptions& options) const {
  const auto c = state.community[d];
  state.remove(graph_, d, true);
  topic_log_weights(state, d, options, false, ws);
  const auto z = static_cast<std::uint32_t>(sample_log_weights(ws.weights, rng));
  state.add(graph_, d, c, z, true);
  return z;
}

std::uint32_t GibbsSampler::sample_community(LatentState& state, DocId d, Rng& rng, Workspace& ws,
                                             const SweepOptions& options) const {
  const auto z = state.topic[d];
  state.remove(graph_, d, false);
  community_log_weights(state, d, options, ws);
  const auto c = static_cast<std::uint32_t>(sample_log_weights(ws.weights, rng));
  state.add(graph_, d, c, z, false);
  return c;
}

double GibbsSampler::sample_lambda(LatentState& state, EdgeId e, Rng& rng, Workspace& ws) const {
  const double value = sample_pg1(friendship_logit(state, e, ws), rng).value;
  state.lambda[e] = value;
  return value;
}

double GibbsSampler::sample_delta(LatentState& state, EdgeId e, Rng& rng, Workspace& ws) const {
  const double value = sample_pg1(diffusion_logit(state, e, Overlay{}, ws), rng).value;
  state.delta[e] = value;
  return value;
}

// ---------------------------------------------------------------------------
// Sweeps

void GibbsSampler::sweep_documents(LatentState& state, std::span<const UserId> users, Rng& rng,
                                   Workspace& ws, const SweepOptions& options,
                                   SweepStats& stats) const {
  if (options.diffusion_terms && params_ == nullptr && graph_.num_diffusions() > 0) {
    throw Error("sampler parameters not set");
  }
  const auto start = Clock::now();
  for (UserId u : users) {
    for (DocId d : graph_.documents_of(u)) {
      if (options.sample_topics) {
        const auto before = state.topic[d];
        if (sample_topic(state, d, rng, ws, options) != before) ++stats.topic_moves;
      }
      if (options.sample_communities) {
        const auto before = state.community[d];
        if (sample_community(state, d, rng, ws, options) != before) ++stats.community_moves;
      }
      ++stats.documents;
    }
  }
  stats.document_seconds += seconds_since(start);
}

void GibbsSampler::sweep_links(LatentState& state, std::span<const EdgeId> friendships,
                               std::span<const EdgeId> diffusions, Rng& rng, Workspace& ws,
                               SweepStats& stats) const {
  auto start = Clock::now();
  for (EdgeId e : friendships) sample_lambda(state, e, rng, ws);
  stats.friendship_edges += friendships.size();
  stats.friendship_seconds += seconds_since(start);
  if (!diffusions.empty() && params_ == nullptr) throw Error("sampler parameters not set");
  start = Clock::now();
  for (EdgeId e : diffusions) sample_delta(state, e, rng, ws);
  stats.diffusion_edges += diffusions.size();
  stats.diffusion_seconds += seconds_since(start);
}

SweepStats GibbsSampler::sweep(LatentState& state, Rng& rng, const SweepOptions& options) const {
  SweepStats stats;
  Workspace ws;
  const auto start = Clock::now();
  std::vector<UserId> users(graph_.num_users());
  for (UserId u = 0; u < users.size(); ++u) users[u] = u;
  sweep_documents(state, users, rng, ws, options, stats);
  if (options.sample_links) {
    std::vector<EdgeId> fedges(graph_.num_friendships()), dedges(graph_.num_diffusions());
    for (EdgeId e = 0; e < fedges.size(); ++e) fedges[e] = e;
    for (EdgeId e = 0; e < dedges.size(); ++e) dedges[e] = e;
    sweep_links(state, fedges, dedges, rng, ws, stats);
  }
  stats.seconds = seconds_since(start);
  if (options.compute_log_joint) stats.log_joint = log_joint(state, options);
  return stats;
}

double GibbsSampler::log_joint(const LatentState& state, const SweepOptions& options) const {
  const std::size_t C = hyper_.communities, Z = hyper_.topics, W = graph_.num_words();
  const double beta = hyper_.beta;
  double total = 0.0;

  const double lg_rho = std::lgamma(rho_), lg_crho = std::lgamma(static_cast<double>(C) * rho_);
  for (UserId u = 0; u < graph_.num_users(); ++u) {
    total += lg_crho - std::lgamma(state.user_total[u] + static_cast<double>(C) * rho_);
    for (std::size_t c = 0; c < C; ++c) total += std::lgamma(state.n_uc(u, c) + rho_) - lg_rho;
  }
  const double lg_alpha = std::lgamma(alpha_), lg_zalpha = std::lgamma(static_cast<double>(Z) * alpha_);
  for (std::size_t c = 0; c < C; ++c) {
    total += lg_zalpha - std::lgamma(state.n_c(c) + static_cast<double>(Z) * alpha_);
    for (std::size_t z = 0; z < Z; ++z) total += std::lgamma(state.n_cz(c, z) + alpha_) - lg_alpha;
  }
  const double lg_beta = std::lgamma(beta), lg_wbeta = std::lgamma(static_cast<double>(W) * beta);
  for (std::size_t z = 0; z < Z; ++z) {
    total += lg_wbeta - std::lgamma(state.n_z(z) + static_cast<double>(W) * beta);
    for (std::size_t w = 0; w < W; ++w) {
      const auto n = state.n_zw(z, static_cast<WordId>(w));
      if (n != 0) total += std::lgamma(n + beta) - lg_beta;
    }
  }

  Workspace ws;
  for (EdgeId e = 0; e < graph_.num_friendships(); ++e) {
    total += log_sigmoid(friendship_logit(state, e, ws));
  }
  if (options.diffusion_terms && graph_.num_diffusions() > 0) {
    if (params_ == nullptr) throw Error("sampler parameters not set");
    for (EdgeId e = 0; e < graph_.num_diffusions(); ++e) {
      total += log_sigmoid(diffusion_logit(state, e, Overlay{}, ws));
    }
  }
  return total;
}

}  // namespace comprof
