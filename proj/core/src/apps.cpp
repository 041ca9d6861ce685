#include "comprof/apps.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "comprof/error.hpp"
#include "comprof/polya_gamma.hpp"

namespace comprof {
namespace {

// Indices of the n largest values, ties to the lower index.
std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t n) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  n = std::min(n, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return values[a] != values[b] ? values[a] > values[b] : a < b;
                    });
  idx.resize(n);
  return idx;
}

}  // namespace

std::vector<WordId> lookup_tokens(const Vocabulary& vocabulary, std::span<const std::string> tokens,
                                  std::vector<std::string>* missing) {
  std::vector<WordId> ids;
  for (const auto& t : tokens) {
    if (const auto id = vocabulary.find(t)) {
      ids.push_back(*id);
    } else if (missing) {
      missing->push_back(t);
    }
  }
  return ids;
}

TopicPosterior doc_topic_posterior(std::span<const WordId> tokens, UserId owner,
                                   const ModelParams& params) {
  const std::size_t C = params.theta.rows, Z = params.theta.cols, W = params.phi.cols;
  if (owner >= params.pi.rows) throw Error("unknown user " + std::to_string(owner));
  TopicPosterior post;
  post.probs.assign(Z, 0.0);
  for (std::size_t z = 0; z < Z; ++z) {
    double prior = 0.0;
    for (std::size_t c = 0; c < C; ++c) prior += params.pi(owner, c) * params.theta(c, z);
    post.probs[z] = std::log(prior);
  }
  std::size_t used = 0;
  for (WordId w : tokens) {
    if (w >= W) {
      ++post.skipped;
      continue;
    }
    ++used;
    for (std::size_t z = 0; z < Z; ++z) post.probs[z] += std::log(params.phi(z, w));
  }
  if (used == 0) {
    post.all_oov = true;
    post.probs.assign(Z, 1.0 / static_cast<double>(Z));
    return post;
  }
  const double hi = *std::max_element(post.probs.begin(), post.probs.end());
  double total = 0.0;
  for (auto& p : post.probs) total += (p = std::exp(p - hi));
  for (auto& p : post.probs) p /= total;
  return post;
}

double predict_diffusion(const ModelParams& params, const AblationConfig& ablation,
                         const PairFeatures& features, UserId u, UserId v,
                         std::span<const WordId> tokens, Bucket t) {
  const std::size_t C = params.theta.rows, Z = params.theta.cols;
  if (u >= params.pi.rows) throw Error("unknown user " + std::to_string(u));
  if (v >= params.pi.rows) throw Error("unknown user " + std::to_string(v));
  if (tokens.empty()) throw Error("cannot predict diffusion of an empty document");
  const auto post = doc_topic_posterior(tokens, v, params);
  const auto pu = params.pi.row(u), pv = params.pi.row(v);
  if (!ablation.heterogeneity) return sigmoid(dot(pu, pv));

  double individual = 0.0;
  if (ablation.individual) {
    const auto f = features.pair(u, v);
    for (std::size_t k = 0; k < f.size(); ++k) individual += params.nu[k] * f[k];
  }
  std::vector<double> a(C), b(C);
  double prob = 0.0;
  for (std::size_t z = 0; z < Z; ++z) {
    for (std::size_t c = 0; c < C; ++c) {
      a[c] = pu[c] * params.theta(c, z);
      b[c] = pv[c] * params.theta(c, z);
    }
    double logit = community_term(a, b, params.eta, static_cast<std::uint32_t>(z)) + individual;
    if (ablation.topic) logit += params.popularity.score(static_cast<std::uint32_t>(z), t);
    prob += sigmoid(logit) * post.probs[z];
  }
  return prob;
}

RankedCommunities rank_communities(std::span<const std::string> query, std::size_t k,
                                   const ModelParams& params, const Vocabulary& vocabulary) {
  if (query.empty()) throw Error("query is empty");
  RankedCommunities out;
  out.query.assign(query.begin(), query.end());
  const auto ids = lookup_tokens(vocabulary, query, &out.skipped);
  if (ids.empty()) {
    std::string names;
    for (const auto& t : out.skipped) names += (names.empty() ? "" : ", ") + t;
    throw Error("no query token is in the vocabulary: " + names);
  }
  const std::size_t C = params.theta.rows, Z = params.theta.cols;

  std::vector<double> lz(Z, 0.0);
  for (std::size_t z = 0; z < Z; ++z) {
    for (WordId w : ids) lz[z] += std::log(params.phi(z, w));
  }
  const double hi = *std::max_element(lz.begin(), lz.end());
  std::vector<double> score(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t z = 0; z < Z; ++z) {
      double inner = 0.0;
      for (std::size_t c2 = 0; c2 < C; ++c2) inner += params.eta(c, c2, z) * params.theta(c2, z);
      score[c] += inner * std::exp(lz[z] - hi);
    }
  }
  const double total = std::accumulate(score.begin(), score.end(), 0.0);
  for (auto& s : score) s = total > 0 ? s / total : 1.0 / static_cast<double>(C);

  const auto order = top_indices(score, k == 0 ? C : std::min(k, C));
  for (std::size_t c : order) out.results.push_back({static_cast<std::uint32_t>(c), score[c]});
  return out;
}

std::vector<TopicSummary> community_topics(const ModelParams& params, const Vocabulary& vocabulary,
                                           std::uint32_t c, std::size_t top_topics,
                                           std::size_t top_words) {
  if (c >= params.theta.rows) throw Error("unknown community " + std::to_string(c));
  std::vector<TopicSummary> out;
  for (std::size_t z : top_indices(params.theta.row(c), top_topics)) {
    TopicSummary s;
    s.topic = static_cast<std::uint32_t>(z);
    s.weight = params.theta(c, z);
    for (std::size_t w : top_indices(params.phi.row(z), top_words)) {
      s.words.push_back(w < vocabulary.size() ? vocabulary.word(static_cast<WordId>(w))
                                              : std::to_string(w));
    }
    out.push_back(std::move(s));
  }
  return out;
}

DiffusionGraphExport export_diffusion_graph(const ModelParams& params, const Vocabulary& vocabulary,
                                            std::optional<std::uint32_t> topic, bool filter,
                                            std::size_t top_topics, std::size_t top_words) {
  const std::size_t C = params.eta.communities(), Z = params.eta.topics();
  if (topic && *topic >= Z) throw Error("unknown topic " + std::to_string(*topic));
  DiffusionGraphExport out;
  out.topic = topic;
  for (std::uint32_t c = 0; c < C; ++c) {
    out.nodes.push_back({c, community_topics(params, vocabulary, c, top_topics, top_words)});
  }
  std::vector<GraphEdge> all;
  double total = 0.0;
  for (std::uint32_t c = 0; c < C; ++c) {
    for (std::uint32_t c2 = 0; c2 < C; ++c2) {
      double w = 0.0;
      if (topic) {
        w = params.eta(c, c2, *topic);
      } else {
        for (std::size_t z = 0; z < Z; ++z) w += params.eta(c, c2, z);
      }
      all.push_back({c, c2, w});
      total += w;
    }
  }
  out.mean_weight = all.empty() ? 0.0 : total / static_cast<double>(all.size());
  for (const auto& e : all) {
    if (!filter || !(e.weight < out.mean_weight)) out.edges.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON payloads

namespace {

nlohmann::ordered_json topics_json(const std::vector<TopicSummary>& topics) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : topics) {
    nlohmann::ordered_json j;
    j["z"] = t.topic;
    j["weight"] = t.weight;
    j["topWords"] = t.words;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace

nlohmann::ordered_json to_json(const RankedCommunities& ranked) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["query"] = ranked.query;
  j["skipped"] = ranked.skipped;
  auto results = nlohmann::ordered_json::array();
  for (const auto& r : ranked.results) {
    nlohmann::ordered_json item;
    item["community"] = r.community;
    item["score"] = r.score;
    results.push_back(std::move(item));
  }
  j["results"] = std::move(results);
  return j;
}

nlohmann::ordered_json to_json(const DiffusionGraphExport& graph) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  if (graph.topic) {
    j["topic"] = *graph.topic;
  } else {
    j["topic"] = "all";
  }
  j["mean_weight"] = graph.mean_weight;
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : graph.nodes) {
    nlohmann::ordered_json node;
    node["id"] = n.id;
    node["topTopics"] = topics_json(n.top_topics);
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : graph.edges) {
    nlohmann::ordered_json edge;
    edge["src"] = e.src;
    edge["dst"] = e.dst;
    if (graph.topic) {
      edge["topic"] = *graph.topic;
    } else {
      edge["topic"] = "all";
    }
    edge["weight"] = e.weight;
    edges.push_back(std::move(edge));
  }
  j["edges"] = std::move(edges);
  return j;
}

nlohmann::ordered_json communities_json(const ModelParams& params, const Vocabulary& vocabulary) {
  const std::size_t C = params.theta.rows;
  std::vector<std::size_t> members(C, 0);
  for (std::size_t u = 0; u < params.pi.rows; ++u) {
    ++members[top_indices(params.pi.row(u), 1).front()];
  }
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  auto arr = nlohmann::ordered_json::array();
  for (std::uint32_t c = 0; c < C; ++c) {
    nlohmann::ordered_json item;
    item["id"] = c;
    item["members"] = members[c];
    item["topTopics"] = topics_json(community_topics(params, vocabulary, c, 3, 4));
    arr.push_back(std::move(item));
  }
  j["communities"] = std::move(arr);
  return j;
}

nlohmann::ordered_json community_profile_json(const ModelParams& params, const Vocabulary& vocabulary,
                                              std::uint32_t c, std::size_t partners) {
  const std::size_t C = params.eta.communities(), Z = params.eta.topics();
  if (c >= C) throw Error("unknown community " + std::to_string(c));
  std::vector<double> strength(C, 0.0);
  for (std::size_t c2 = 0; c2 < C; ++c2) {
    for (std::size_t z = 0; z < Z; ++z) strength[c2] += params.eta(c, c2, z);
  }
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["id"] = c;
  j["content"] = topics_json(community_topics(params, vocabulary, c));
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t c2 : top_indices(strength, partners)) {
    std::vector<double> per_topic(Z);
    for (std::size_t z = 0; z < Z; ++z) per_topic[z] = params.eta(c, c2, z);
    nlohmann::ordered_json item;
    item["community"] = c2;
    item["weight"] = strength[c2];
    item["topTopics"] = [&] {
      auto t = nlohmann::ordered_json::array();
      for (std::size_t z : top_indices(per_topic, 3)) {
        t.push_back({{"z", z}, {"weight", per_topic[z]}});
      }
      return t;
    }();
    arr.push_back(std::move(item));
  }
  j["diffusionPartners"] = std::move(arr);
  return j;
}

}  // namespace comprof
