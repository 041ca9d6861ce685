#include "comprof/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "comprof/apps.hpp"
#include "comprof/error.hpp"
#include "comprof/polya_gamma.hpp"

namespace comprof {

// ---------------------------------------------------------------------------
// Metrics

double perplexity(const SocialGraph& graph, std::span<const DocId> docs, const Matrix& pi,
                  const Matrix& theta, const Matrix& phi) {
  const std::size_t C = theta.rows, Z = theta.cols;
  std::vector<double> mix(Z);
  double log_lik = 0.0;
  std::size_t tokens = 0;
  for (DocId d : docs) {
    const auto& doc = graph.document(d);
    std::fill(mix.begin(), mix.end(), 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      const double p = pi(doc.owner, c);
      for (std::size_t z = 0; z < Z; ++z) mix[z] += p * theta(c, z);
    }
    for (WordId w : doc.tokens) {
      double p = 0.0;
      for (std::size_t z = 0; z < Z; ++z) p += mix[z] * phi(z, w);
      log_lik += std::log(p);
    }
    tokens += doc.tokens.size();
  }
  return tokens == 0 ? 1.0 : std::exp(-log_lik / static_cast<double>(tokens));
}

double perplexity(const SocialGraph& graph, const Matrix& pi, const Matrix& theta, const Matrix& phi) {
  std::vector<DocId> docs(graph.num_documents());
  std::iota(docs.begin(), docs.end(), 0);
  return perplexity(graph, docs, pi, theta, phi);
}

std::vector<std::vector<std::uint32_t>> top_communities(const Matrix& pi, std::size_t top_k) {
  std::vector<std::vector<std::uint32_t>> out(pi.rows);
  const std::size_t k = std::min(top_k, pi.cols);
  std::vector<std::uint32_t> idx(pi.cols);
  for (std::size_t u = 0; u < pi.rows; ++u) {
    std::iota(idx.begin(), idx.end(), 0);
    const auto row = pi.row(u);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        return row[a] != row[b] ? row[a] > row[b] : a < b;
                      });
    out[u].assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

double conductance(const SocialGraph& graph, const std::vector<std::vector<std::uint32_t>>& membership,
                   std::size_t communities) {
  if (membership.size() != graph.num_users()) throw Error("membership does not match the user count");
  std::vector<std::vector<char>> inside(communities, std::vector<char>(graph.num_users(), 0));
  std::vector<std::size_t> size(communities, 0);
  for (UserId u = 0; u < graph.num_users(); ++u) {
    for (auto c : membership[u]) {
      if (c >= communities) throw Error("membership names an unknown community");
      if (!inside[c][u]) {
        inside[c][u] = 1;
        ++size[c];
      }
    }
  }
  const double total_volume = 2.0 * static_cast<double>(graph.num_friendships());
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < communities; ++c) {
    if (size[c] == 0) continue;
    double volume = 0.0;
    for (UserId u = 0; u < graph.num_users(); ++u) {
      if (inside[c][u]) volume += static_cast<double>(graph.friendship_edges_of(u).size());
    }
    double cut = 0.0;
    for (const auto& e : graph.friendships()) {
      if (inside[c][e.src] != inside[c][e.dst]) cut += 1.0;
    }
    const double denom = std::min(volume, total_volume - volume);
    sum += denom > 0 ? cut / denom : 0.0;
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

double conductance(const SocialGraph& graph, const Matrix& pi, std::size_t top_k) {
  return conductance(graph, top_communities(pi, top_k), pi.cols);
}

double auc(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw Error("AUC needs positives and negatives");
  std::vector<double> neg(negatives.begin(), negatives.end());
  std::sort(neg.begin(), neg.end());
  double wins = 0.0;
  for (double p : positives) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(lo, neg.end(), p);
    wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(positives.size()) * static_cast<double>(neg.size()));
}

RankMetrics rank_metrics(const std::vector<std::vector<std::uint32_t>>& rankings,
                         const std::vector<std::vector<UserId>>& relevant,
                         const std::vector<std::vector<std::uint32_t>>& membership, std::size_t k_max) {
  if (rankings.size() != relevant.size()) throw Error("rankings and relevance lists differ in length");
  std::map<std::uint32_t, std::vector<UserId>> members;
  for (UserId u = 0; u < membership.size(); ++u) {
    for (auto c : membership[u]) members[c].push_back(u);
  }
  RankMetrics out;
  out.map.assign(k_max, 0.0);
  out.mar.assign(k_max, 0.0);
  out.maf.assign(k_max, 0.0);
  const std::size_t Q = rankings.size();
  if (Q == 0) return out;
  for (std::size_t q = 0; q < Q; ++q) {
    const std::unordered_set<UserId> truth(relevant[q].begin(), relevant[q].end());
    std::unordered_set<UserId> top;
    std::size_t hits = 0;
    double p_sum = 0.0, r_sum = 0.0;
    for (std::size_t k = 1; k <= k_max; ++k) {
      if (k <= rankings[q].size()) {
        const auto it = members.find(rankings[q][k - 1]);
        if (it != members.end()) {
          for (UserId u : it->second) {
            if (top.insert(u).second && truth.contains(u)) ++hits;
          }
        }
      }
      p_sum += top.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(top.size());
      r_sum += truth.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(truth.size());
      out.map[k - 1] += p_sum / static_cast<double>(k);
      out.mar[k - 1] += r_sum / static_cast<double>(k);
    }
  }
  for (std::size_t k = 0; k < k_max; ++k) {
    out.map[k] /= static_cast<double>(Q);
    out.mar[k] /= static_cast<double>(Q);
    const double s = out.map[k] + out.mar[k];
    out.maf[k] = s > 0 ? 2.0 * out.map[k] * out.mar[k] / s : 0.0;
  }
  return out;
}

double nmi(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  if (a.size() != b.size()) throw Error("NMI needs labelings of equal length");
  if (a.empty()) return 1.0;
  const double n = static_cast<double>(a.size());
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> joint;
  std::map<std::uint32_t, double> pa, pb;
  for (std::size_t k = 0; k < a.size(); ++k) {
    joint[{a[k], b[k]}] += 1.0;
    pa[a[k]] += 1.0;
    pb[b[k]] += 1.0;
  }
  auto entropy = [n](const std::map<std::uint32_t, double>& p) {
    double h = 0.0;
    for (const auto& [_, c] : p) h -= c / n * std::log(c / n);
    return h;
  };
  const double ha = entropy(pa), hb = entropy(pb);
  if (ha == 0.0 && hb == 0.0) return 1.0;
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    mi += c / n * std::log(c * n / (pa[key.first] * pb[key.second]));
  }
  return mi / (0.5 * (ha + hb));
}

// ---------------------------------------------------------------------------
// Aggregation baseline

AggregatedProfiles aggregate_profiles(const Matrix& pi, const Matrix& doc_topics,
                                      const SocialGraph& graph) {
  const std::size_t C = pi.cols, Z = doc_topics.cols;
  if (pi.rows != graph.num_users() || doc_topics.rows != graph.num_documents()) {
    throw Error("aggregation inputs do not match the graph");
  }
  AggregatedProfiles out{Matrix(C, Z), EtaTensor(C, Z, 0.01)};
  std::vector<double> mean(Z);
  for (UserId u = 0; u < graph.num_users(); ++u) {
    const auto docs = graph.documents_of(u);
    if (docs.empty()) continue;
    std::fill(mean.begin(), mean.end(), 0.0);
    for (DocId d : docs) {
      for (std::size_t z = 0; z < Z; ++z) mean[z] += doc_topics(d, z);
    }
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t z = 0; z < Z; ++z) {
        out.theta(c, z) += pi(u, c) * mean[z] / static_cast<double>(docs.size());
      }
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    const auto row = out.theta.row(c);
    const double total = std::accumulate(row.begin(), row.end(), 0.0);
    for (auto& x : row) x = total > 0 ? x / total : 1.0 / static_cast<double>(Z);
  }
  for (const auto& e : graph.diffusions()) {
    const UserId u = graph.document(e.src).owner, v = graph.document(e.dst).owner;
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t c2 = 0; c2 < C; ++c2) {
        const double m = pi(u, c) * pi(v, c2);
        for (std::size_t z = 0; z < Z; ++z) {
          out.eta(c, c2, z) += m * doc_topics(e.src, z) * doc_topics(e.dst, z);
        }
      }
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    double total = 0.0;
    for (std::size_t c2 = 0; c2 < C; ++c2) {
      for (std::size_t z = 0; z < Z; ++z) total += out.eta(c, c2, z);
    }
    for (std::size_t c2 = 0; c2 < C; ++c2) {
      for (std::size_t z = 0; z < Z; ++z) out.eta(c, c2, z) /= total;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force collapsed joint

namespace {

double log_delta_ratio(const std::vector<double>& counts, double prior) {
  double lg = 0.0, total = 0.0;
  for (double n : counts) {
    lg += std::lgamma(n + prior) - std::lgamma(prior);
    total += n;
  }
  const double dim_prior = prior * static_cast<double>(counts.size());
  return lg - (std::lgamma(total + dim_prior) - std::lgamma(dim_prior));
}

}  // namespace

double collapsed_joint_oracle(const SocialGraph& graph, std::span<const std::uint32_t> community,
                              std::span<const std::uint32_t> topic, const Hyperparams& hyper,
                              const LinkParams& params, const PairFeatures& features,
                              const AblationConfig& ablation) {
  const std::size_t U = graph.num_users(), C = hyper.communities, Z = hyper.topics,
                    W = graph.num_words();
  const double alpha = hyper.alpha_value(), rho = hyper.rho_value(), beta = hyper.beta;
  std::vector<std::vector<double>> n_uc(U, std::vector<double>(C, 0.0));
  std::vector<std::vector<double>> n_cz(C, std::vector<double>(Z, 0.0));
  std::vector<std::vector<double>> n_zw(Z, std::vector<double>(W, 0.0));
  for (DocId d = 0; d < graph.num_documents(); ++d) {
    const auto& doc = graph.document(d);
    n_uc[doc.owner][community[d]] += 1.0;
    n_cz[community[d]][topic[d]] += 1.0;
    for (WordId w : doc.tokens) n_zw[topic[d]][w] += 1.0;
  }
  double total = 0.0;
  for (const auto& row : n_uc) total += log_delta_ratio(row, rho);
  for (const auto& row : n_cz) total += log_delta_ratio(row, alpha);
  for (const auto& row : n_zw) total += log_delta_ratio(row, beta);

  auto pi_hat = [&](UserId u, std::size_t c) {
    double n = 0.0;
    for (double x : n_uc[u]) n += x;
    return (n_uc[u][c] + rho) / (n + static_cast<double>(C) * rho);
  };
  auto theta_hat = [&](std::size_t c, std::size_t z) {
    double n = 0.0;
    for (double x : n_cz[c]) n += x;
    return (n_cz[c][z] + alpha) / (n + static_cast<double>(Z) * alpha);
  };
  auto membership_dot = [&](UserId u, UserId v) {
    double s = 0.0;
    for (std::size_t c = 0; c < C; ++c) s += pi_hat(u, c) * pi_hat(v, c);
    return s;
  };

  for (const auto& e : graph.friendships()) total += std::log(sigmoid(membership_dot(e.src, e.dst)));
  for (const auto& e : graph.diffusions()) {
    const UserId u = graph.document(e.src).owner, v = graph.document(e.dst).owner;
    double logit = 0.0;
    if (!ablation.heterogeneity) {
      logit = membership_dot(u, v);
    } else {
      const std::size_t z = topic[e.src];
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t c2 = 0; c2 < C; ++c2) {
          logit += params.eta(c, c2, z) * theta_hat(c, z) * pi_hat(u, c) * theta_hat(c2, z) *
                   pi_hat(v, c2);
        }
      }
      if (ablation.topic) logit += params.popularity.score(static_cast<std::uint32_t>(z), e.bucket);
      if (ablation.individual) {
        const auto f = features.pair(u, v);
        for (std::size_t k = 0; k < f.size(); ++k) logit += params.nu[k] * f[k];
      }
    }
    total += std::log(sigmoid(logit));
  }
  return total;
}

std::vector<double> enumerate_collapsed_joint(const SocialGraph& graph, const Hyperparams& hyper,
                                              const LinkParams& params, const PairFeatures& features,
                                              const AblationConfig& ablation, std::size_t max_configs) {
  const std::size_t D = graph.num_documents();
  const std::size_t per_doc = hyper.communities * hyper.topics;
  std::size_t configs = 1;
  for (std::size_t d = 0; d < D; ++d) {
    if (configs > max_configs / per_doc) {
      throw Error("instance too large to enumerate (more than " + std::to_string(max_configs) +
                  " configurations)");
    }
    configs *= per_doc;
  }
  std::vector<double> logp(configs);
  std::vector<std::uint32_t> c(D), z(D);
  for (std::size_t k = 0; k < configs; ++k) {
    std::size_t rest = k;
    for (std::size_t d = 0; d < D; ++d) {
      const std::size_t digit = rest % per_doc;
      rest /= per_doc;
      c[d] = static_cast<std::uint32_t>(digit / hyper.topics);
      z[d] = static_cast<std::uint32_t>(digit % hyper.topics);
    }
    logp[k] = collapsed_joint_oracle(graph, c, z, hyper, params, features, ablation);
  }
  const double hi = *std::max_element(logp.begin(), logp.end());
  double total = 0.0;
  for (auto& p : logp) total += (p = std::exp(p - hi));
  for (auto& p : logp) p /= total;
  return logp;
}

// ---------------------------------------------------------------------------
// Cross validation

Subgraph restrict_graph(const SocialGraph& graph, std::span<const char> keep_docs,
                        std::span<const char> keep_friendships, std::span<const char> keep_diffusions) {
  if (keep_docs.size() != graph.num_documents() || keep_friendships.size() != graph.num_friendships() ||
      keep_diffusions.size() != graph.num_diffusions()) {
    throw Error("keep masks do not match the graph");
  }
  GraphBuilder builder;
  for (UserId u = 0; u < graph.num_users(); ++u) builder.add_user(graph.user_name(u));
  Subgraph out;
  out.new_id.assign(graph.num_documents(), UINT32_MAX);
  for (DocId d = 0; d < graph.num_documents(); ++d) {
    if (!keep_docs[d]) continue;
    const auto& doc = graph.document(d);
    out.new_id[d] = builder.add_document(doc.name, doc.owner, doc.tokens, doc.timestamp);
  }
  const auto fr = graph.friendships();
  for (EdgeId e = 0; e < fr.size(); ++e) {
    if (keep_friendships[e]) builder.add_friendship(fr[e].src, fr[e].dst);
  }
  const auto df = graph.diffusions();
  for (EdgeId e = 0; e < df.size(); ++e) {
    const DocId i = out.new_id[df[e].src], j = out.new_id[df[e].dst];
    if (keep_diffusions[e] && i != UINT32_MAX && j != UINT32_MAX) {
      builder.add_diffusion(i, j, df[e].timestamp);
    }
  }
  out.graph = builder.build(graph.num_words(), graph.time().granularity, graph.time().origin);
  return out;
}

std::vector<std::uint32_t> fold_assignment(std::size_t n, std::size_t k, Rng& rng) {
  if (k == 0) throw Error("fold count must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::uint32_t> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[order[pos]] = static_cast<std::uint32_t>(pos % k);
  return fold;
}

void EvalReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "metric,k,value\n";
  out << "folds,," << folds << '\n';
  out << "conductance,," << conductance << '\n';
  out << "friendship_auc,," << friendship_auc << '\n';
  out << "diffusion_auc,," << diffusion_auc << '\n';
  out << "perplexity,," << perplexity << '\n';
  for (std::size_t k = 0; k < map.size(); ++k) {
    out << "map," << k + 1 << ',' << map[k] << '\n';
    out << "mar," << k + 1 << ',' << mar[k] << '\n';
    out << "maf," << k + 1 << ',' << maf[k] << '\n';
  }
}

void EvalReport::write_json(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["folds"] = folds;
  j["conductance"] = conductance;
  j["friendship_auc"] = friendship_auc;
  j["diffusion_auc"] = diffusion_auc;
  j["perplexity"] = perplexity;
  j["map"] = map;
  j["mar"] = mar;
  j["maf"] = maf;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

namespace {

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

std::size_t folds_to_run(const CrossValidationOptions& options) {
  if (options.folds < 2) throw Error("cross validation needs at least 2 folds");
  return options.evaluate_folds == 0 ? options.folds : std::min(options.evaluate_folds, options.folds);
}

// Scores held-out diffusion links and as many sampled non-links.
double held_out_diffusion_auc(const SocialGraph& full, std::span<const EdgeId> held,
                              const ModelParams& params, const AblationConfig& ablation,
                              const PairFeatures& features, double negative_ratio, Rng& rng) {
  std::vector<double> pos, neg;
  for (EdgeId e : held) {
    const auto& edge = full.diffusions()[e];
    const auto& target = full.document(edge.dst);
    pos.push_back(predict_diffusion(params, ablation, features, full.document(edge.src).owner,
                                    target.owner, target.tokens, edge.bucket));
  }
  const auto want = static_cast<std::size_t>(std::llround(negative_ratio * static_cast<double>(held.size())));
  const std::size_t D = full.num_documents();
  for (std::size_t attempt = 0; neg.size() < want && attempt < 100 * want + 100; ++attempt) {
    const auto i = static_cast<DocId>(rng.below(D)), j = static_cast<DocId>(rng.below(D));
    if (i == j || full.has_diffusion(i, j)) continue;
    const auto& target = full.document(j);
    neg.push_back(predict_diffusion(params, ablation, features, full.document(i).owner, target.owner,
                                    target.tokens, full.document(i).bucket));
  }
  return auc(pos, neg);
}

}  // namespace

EvalReport cross_validate(const SocialGraph& graph, const Vocabulary& vocabulary,
                          const TrainConfig& config, const CrossValidationOptions& options) {
  const std::size_t runs = folds_to_run(options);
  Rng rng(options.seed, 11);
  const auto fold_f = fold_assignment(graph.num_friendships(), options.folds, rng);
  const auto fold_e = fold_assignment(graph.num_diffusions(), options.folds, rng);
  std::unordered_set<std::uint64_t> friends;
  for (const auto& e : graph.friendships()) friends.insert(pair_key(e.src, e.dst));

  EvalReport report;
  report.folds = runs;
  report.map.assign(options.k_max, 0.0);
  report.mar.assign(options.k_max, 0.0);
  report.maf.assign(options.k_max, 0.0);
  const std::vector<char> keep_docs(graph.num_documents(), 1);

  for (std::size_t fold = 0; fold < runs; ++fold) {
    std::vector<char> keep_f(graph.num_friendships()), keep_e(graph.num_diffusions());
    std::vector<EdgeId> held_f, held_e;
    for (EdgeId e = 0; e < keep_f.size(); ++e) {
      keep_f[e] = fold_f[e] != fold;
      if (!keep_f[e]) held_f.push_back(e);
    }
    for (EdgeId e = 0; e < keep_e.size(); ++e) {
      keep_e[e] = fold_e[e] != fold;
      if (!keep_e[e]) held_e.push_back(e);
    }
    const auto sub = restrict_graph(graph, keep_docs, keep_f, keep_e);
    TrainConfig fold_config = config;
    fold_config.seed = config.seed + fold;
    Trainer trainer(sub.graph, fold_config);
    trainer.run();
    const ModelParams params = trainer.params();
    const PairFeatures& features = trainer.features();

    if (!held_f.empty()) {
      std::vector<double> pos, neg;
      for (EdgeId e : held_f) {
        const auto& edge = graph.friendships()[e];
        pos.push_back(friendship_prob(params.pi.row(edge.src), params.pi.row(edge.dst)));
      }
      const auto want = static_cast<std::size_t>(std::llround(options.negative_ratio * static_cast<double>(held_f.size())));
      for (std::size_t attempt = 0; neg.size() < want && attempt < 100 * want + 100; ++attempt) {
        const auto u = static_cast<UserId>(rng.below(graph.num_users()));
        const auto v = static_cast<UserId>(rng.below(graph.num_users()));
        if (u == v || friends.contains(pair_key(u, v))) continue;
        neg.push_back(friendship_prob(params.pi.row(u), params.pi.row(v)));
      }
      if (!neg.empty()) report.friendship_auc += auc(pos, neg);
    }
    if (!held_e.empty()) {
      report.diffusion_auc += held_out_diffusion_auc(graph, held_e, params, config.ablation, features,
                                                     options.negative_ratio, rng);
    }
    report.conductance += conductance(graph, params.pi, options.top_k);
    report.perplexity += perplexity(sub.graph, params.pi, params.theta, params.phi);

    // Ranking: frequent words of held-out diffusing documents as queries.
    std::map<WordId, std::vector<UserId>> users_of_word;
    std::map<WordId, std::size_t> freq;
    for (EdgeId e : held_e) {
      const auto& doc = graph.document(graph.diffusions()[e].src);
      for (WordId w : doc.tokens) {
        ++freq[w];
        users_of_word[w].push_back(doc.owner);
      }
    }
    std::vector<std::pair<WordId, std::size_t>> ordered(freq.begin(), freq.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ordered.size() > options.queries) ordered.resize(options.queries);
    std::vector<std::vector<std::uint32_t>> rankings;
    std::vector<std::vector<UserId>> relevant;
    for (const auto& [w, _] : ordered) {
      const std::string word = vocabulary.word(w);
      const auto ranked = rank_communities(std::span<const std::string>(&word, 1), 0, params, vocabulary);
      std::vector<std::uint32_t> order;
      for (const auto& r : ranked.results) order.push_back(r.community);
      rankings.push_back(std::move(order));
      relevant.push_back(users_of_word[w]);
    }
    const auto rm = rank_metrics(rankings, relevant, top_communities(params.pi, options.top_k), options.k_max);
    for (std::size_t k = 0; k < options.k_max; ++k) {
      report.map[k] += rm.map[k];
      report.mar[k] += rm.mar[k];
    }
  }

  const double n = static_cast<double>(runs);
  report.conductance /= n;
  report.friendship_auc /= n;
  report.diffusion_auc /= n;
  report.perplexity /= n;
  for (std::size_t k = 0; k < options.k_max; ++k) {
    report.map[k] /= n;
    report.mar[k] /= n;
    const double s = report.map[k] + report.mar[k];
    report.maf[k] = s > 0 ? 2.0 * report.map[k] * report.mar[k] / s : 0.0;
  }
  return report;
}

std::vector<double> diffusion_auc_folds(const SocialGraph& graph, const TrainConfig& config,
                                        const CrossValidationOptions& options) {
  const std::size_t runs = folds_to_run(options);
  Rng rng(options.seed, 12);
  const auto fold_e = fold_assignment(graph.num_diffusions(), options.folds, rng);
  const std::vector<char> keep_docs(graph.num_documents(), 1);
  const std::vector<char> keep_f(graph.num_friendships(), 1);
  std::vector<double> out;
  for (std::size_t fold = 0; fold < runs; ++fold) {
    std::vector<char> keep_e(graph.num_diffusions());
    std::vector<EdgeId> held;
    for (EdgeId e = 0; e < keep_e.size(); ++e) {
      keep_e[e] = fold_e[e] != fold;
      if (!keep_e[e]) held.push_back(e);
    }
    const auto sub = restrict_graph(graph, keep_docs, keep_f, keep_e);
    TrainConfig fold_config = config;
    fold_config.seed = config.seed + fold;
    Trainer trainer(sub.graph, fold_config);
    trainer.run();
    // Negatives are drawn from a per-fold stream shared by every variant.
    Rng neg_rng(options.seed, 100 + fold);
    out.push_back(held_out_diffusion_auc(graph, held, trainer.params(), config.ablation,
                                         trainer.features(), options.negative_ratio, neg_rng));
  }
  return out;
}

std::vector<PerplexityFold> perplexity_folds(const SocialGraph& graph, const TrainConfig& config,
                                             const CrossValidationOptions& options) {
  const std::size_t runs = folds_to_run(options);
  Rng rng(options.seed, 13);
  const auto fold_d = fold_assignment(graph.num_documents(), options.folds, rng);
  const std::vector<char> keep_f(graph.num_friendships(), 1);
  const std::vector<char> keep_e(graph.num_diffusions(), 1);
  std::vector<PerplexityFold> out;
  for (std::size_t fold = 0; fold < runs; ++fold) {
    std::vector<char> keep_docs(graph.num_documents());
    std::vector<DocId> held;
    for (DocId d = 0; d < keep_docs.size(); ++d) {
      keep_docs[d] = fold_d[d] != fold;
      if (!keep_docs[d]) held.push_back(d);
    }
    const auto sub = restrict_graph(graph, keep_docs, keep_f, keep_e);

    PerplexityFold result;
    TrainConfig joint_config = config;
    joint_config.seed = config.seed + fold;
    joint_config.ablation.joint = true;
    {
      Trainer trainer(sub.graph, joint_config);
      trainer.run();
      const auto p = trainer.params();
      result.joint = perplexity(graph, held, p.pi, p.theta, p.phi);
    }
    TrainConfig detect_config = joint_config;
    detect_config.ablation.joint = false;
    {
      Trainer trainer(sub.graph, detect_config);
      trainer.run();
      const auto p = trainer.params();
      Matrix doc_topics(sub.graph.num_documents(), config.hyper.topics);
      for (DocId d = 0; d < sub.graph.num_documents(); ++d) doc_topics(d, trainer.state().topic[d]) = 1.0;
      const auto agg = aggregate_profiles(p.pi, doc_topics, sub.graph);
      result.aggregated = perplexity(graph, held, p.pi, agg.theta, p.phi);
    }
    out.push_back(result);
  }
  return out;
}

}  // namespace comprof
