#include "comprof/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "comprof/error.hpp"
#include "comprof/polya_gamma.hpp"

namespace comprof {

void SyntheticSpec::validate() const {
  if (users < 2) throw Error("users must be at least 2");
  if (communities == 0) throw Error("communities must be positive");
  if (topics == 0) throw Error("topics must be positive");
  if (words == 0) throw Error("words must be positive");
  if (docs_per_user == 0) throw Error("docs_per_user must be positive");
  if (tokens_per_doc == 0) throw Error("tokens_per_doc must be positive");
  auto unit = [](double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0)) throw Error(std::string(name) + " must lie in [0, 1]");
  };
  unit(community_purity, "community_purity");
  unit(topic_purity, "topic_purity");
  unit(word_purity, "word_purity");
  unit(eta_self, "eta_self");
  unit(peak_share, "peak_share");
  unit(same_community_bias, "same_community_bias");
  unit(trend_bias, "trend_bias");
  unit(target_bias, "target_bias");
  if (buckets <= 0) throw Error("buckets must be positive");
  if (granularity <= 0) throw Error("granularity must be positive");
  if (!(fame_sigma >= 0) || !std::isfinite(fame_sigma)) throw Error("fame_sigma must be non-negative");
  if (!std::isfinite(eta_scale)) throw Error("eta_scale must be finite");
  for (double x : nu) {
    if (!std::isfinite(x)) throw Error("nu must be finite");
  }
}

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = nlohmann::json{{"users", s.users},
                     {"communities", s.communities},
                     {"topics", s.topics},
                     {"words", s.words},
                     {"docs_per_user", s.docs_per_user},
                     {"tokens_per_doc", s.tokens_per_doc},
                     {"friendships", s.friendships},
                     {"diffusions", s.diffusions},
                     {"community_purity", s.community_purity},
                     {"topic_purity", s.topic_purity},
                     {"word_purity", s.word_purity},
                     {"eta_self", s.eta_self},
                     {"buckets", s.buckets},
                     {"granularity", s.granularity},
                     {"start_time", s.start_time},
                     {"peak_share", s.peak_share},
                     {"fame_sigma", s.fame_sigma},
                     {"same_community_bias", s.same_community_bias},
                     {"trend_bias", s.trend_bias},
                     {"target_bias", s.target_bias},
                     {"eta_scale", s.eta_scale},
                     {"nu", s.nu},
                     {"topic_factor", s.topic_factor},
                     {"individual_factor", s.individual_factor}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  if (!j.is_object()) throw Error("synthetic spec must be a JSON object");
  const nlohmann::json defaults = SyntheticSpec{};
  for (const auto& [key, _] : j.items()) {
    if (!defaults.contains(key)) throw Error("unknown synthetic spec key '" + key + "'");
  }
  nlohmann::json merged = defaults;
  merged.update(j);
  try {
    merged.at("users").get_to(s.users);
    merged.at("communities").get_to(s.communities);
    merged.at("topics").get_to(s.topics);
    merged.at("words").get_to(s.words);
    merged.at("docs_per_user").get_to(s.docs_per_user);
    merged.at("tokens_per_doc").get_to(s.tokens_per_doc);
    merged.at("friendships").get_to(s.friendships);
    merged.at("diffusions").get_to(s.diffusions);
    merged.at("community_purity").get_to(s.community_purity);
    merged.at("topic_purity").get_to(s.topic_purity);
    merged.at("word_purity").get_to(s.word_purity);
    merged.at("eta_self").get_to(s.eta_self);
    merged.at("buckets").get_to(s.buckets);
    merged.at("granularity").get_to(s.granularity);
    merged.at("start_time").get_to(s.start_time);
    merged.at("peak_share").get_to(s.peak_share);
    merged.at("fame_sigma").get_to(s.fame_sigma);
    merged.at("same_community_bias").get_to(s.same_community_bias);
    merged.at("trend_bias").get_to(s.trend_bias);
    merged.at("target_bias").get_to(s.target_bias);
    merged.at("eta_scale").get_to(s.eta_scale);
    merged.at("nu").get_to(s.nu);
    merged.at("topic_factor").get_to(s.topic_factor);
    merged.at("individual_factor").get_to(s.individual_factor);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad synthetic spec: ") + e.what());
  }
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
  SyntheticSpec spec = j.get<SyntheticSpec>();
  spec.validate();
  return spec;
}

namespace {

template <typename Weights>
std::size_t draw(const Weights& weights, Rng& rng) {
  std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
  return dist(rng);
}

std::size_t draw_row(std::span<const double> row, Rng& rng) {
  double u = rng.uniform();
  for (std::size_t k = 0; k + 1 < row.size(); ++k) {
    if (u < row[k]) return k;
    u -= row[k];
  }
  return row.size() - 1;
}

// Puts `mass` evenly on `own` and the rest evenly on the other entries.
void fill_row(std::span<double> row, const std::vector<std::size_t>& own, double mass) {
  const std::size_t others = row.size() - own.size();
  if (others == 0) mass = 1.0;
  std::fill(row.begin(), row.end(), others == 0 ? 0.0 : (1.0 - mass) / static_cast<double>(others));
  for (auto k : own) row[k] = mass / static_cast<double>(own.size());
}

}  // namespace

SyntheticData generate(const SyntheticSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t U = spec.users, C = spec.communities, Z = spec.topics, W = spec.words;
  const Bucket B = spec.buckets;
  SyntheticData out;
  out.pi = Matrix(U, C);
  out.theta = Matrix(C, Z);
  out.phi = Matrix(Z, W);
  out.eta = EtaTensor(C, Z);
  out.nu = spec.nu;

  for (UserId u = 0; u < U; ++u) {
    fill_row(out.pi.row(u), {u % C}, spec.community_purity);
    out.user_community.push_back(static_cast<std::uint32_t>(u % C));
  }
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<std::size_t> own;
    for (std::size_t z = c; z < Z; z += C) own.push_back(z);
    if (own.empty()) own.push_back(c % Z);
    fill_row(out.theta.row(c), own, spec.topic_purity);
  }
  const std::size_t block = std::max<std::size_t>(W / Z, 1);
  for (std::size_t z = 0; z < Z; ++z) {
    std::vector<std::size_t> own;
    const std::size_t first = (z * block) % W;
    for (std::size_t w = first; w < std::min(first + block, W); ++w) own.push_back(w);
    fill_row(out.phi.row(z), own, spec.word_purity);
  }
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t c2 = 0; c2 < C; ++c2) {
      const double share = C == 1 ? 1.0 : (c2 == c ? spec.eta_self : (1.0 - spec.eta_self) / static_cast<double>(C - 1));
      for (std::size_t z = 0; z < Z; ++z) out.eta(c, c2, z) = share / static_cast<double>(Z);
    }
  }
  for (std::size_t w = 0; w < W; ++w) out.vocabulary.add("w" + std::to_string(w));

  // Documents.
  GraphBuilder builder;
  for (UserId u = 0; u < U; ++u) builder.add_user("u" + std::to_string(u));
  std::vector<Bucket> doc_bucket;
  std::vector<std::int64_t> doc_time;
  std::vector<std::vector<DocId>> docs_of(U);
  for (UserId u = 0; u < U; ++u) {
    for (std::size_t k = 0; k < spec.docs_per_user; ++k) {
      const auto c = static_cast<std::uint32_t>(draw_row(out.pi.row(u), rng));
      const auto z = static_cast<std::uint32_t>(draw_row(out.theta.row(c), rng));
      std::vector<WordId> tokens(spec.tokens_per_doc);
      for (auto& w : tokens) w = static_cast<WordId>(draw_row(out.phi.row(z), rng));
      const Bucket peak = static_cast<Bucket>((z * static_cast<std::size_t>(B)) / Z);
      Bucket t;
      if (rng.uniform() < spec.peak_share) {
        t = std::clamp<Bucket>(peak + static_cast<Bucket>(rng.below(3)) - 1, 0, B - 1);
      } else {
        t = static_cast<Bucket>(rng.below(static_cast<std::uint64_t>(B)));
      }
      const std::int64_t ts = spec.start_time + t * spec.granularity +
                              static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(spec.granularity)));
      const DocId d = builder.add_document("d" + std::to_string(builder.num_documents()), u,
                                           std::move(tokens), ts);
      docs_of[u].push_back(d);
      out.doc_community.push_back(c);
      out.doc_topic.push_back(z);
      doc_bucket.push_back(t);
      doc_time.push_back(ts);
    }
  }
  const std::size_t D = out.doc_topic.size();

  // Friendships: proposals favour famous users inside the main community.
  std::vector<double> fame(U);
  for (auto& f : fame) f = std::exp(spec.fame_sigma * rng.normal());
  std::vector<std::vector<UserId>> members(C);
  std::vector<std::vector<double>> member_fame(C);
  for (UserId u = 0; u < U; ++u) {
    members[out.user_community[u]].push_back(u);
    member_fame[out.user_community[u]].push_back(fame[u]);
  }
  std::discrete_distribution<std::size_t> any_famous(fame.begin(), fame.end());
  std::vector<std::discrete_distribution<std::size_t>> famous_in;
  for (std::size_t c = 0; c < C; ++c) {
    if (member_fame[c].empty()) member_fame[c].push_back(0.0);
    famous_in.emplace_back(member_fame[c].begin(), member_fame[c].end());
  }
  auto famous_member = [&](std::uint32_t c) -> UserId {
    if (members[c].empty() || rng.uniform() >= spec.same_community_bias) {
      return static_cast<UserId>(any_famous(rng));
    }
    return members[c][famous_in[c](rng)];
  };

  std::vector<std::size_t> followers(U, 0), followees(U, 0);
  std::size_t accepted = 0;
  for (std::size_t attempt = 0; accepted < spec.friendships && attempt < 20 * spec.friendships + 100; ++attempt) {
    const auto u = static_cast<UserId>(rng.below(U));
    const UserId v = famous_member(out.user_community[u]);
    if (u == v) continue;
    if (rng.uniform() >= sigmoid(dot(out.pi.row(u), out.pi.row(v)))) continue;
    if (!builder.add_friendship(u, v)) continue;
    ++followees[u];
    ++followers[v];
    ++accepted;
  }
  std::vector<double> popularity(U);
  for (UserId u = 0; u < U; ++u) {
    popularity[u] = static_cast<double>(followers[u]) / static_cast<double>(std::max<std::size_t>(followees[u], 1));
  }
  const PairFeatures features(popularity, std::vector<double>(U, 0.0));

  out.popularity = TopicPopularity(Z, B);
  for (DocId d = 0; d < D; ++d) out.popularity.add(out.doc_topic[d], doc_bucket[d]);
  out.popularity.refresh();

  // Diffusions: sources from busy (topic, bucket) cells, targets by planted
  // eta, shared topic and fame.
  std::vector<double> busy(D);
  for (DocId d = 0; d < D; ++d) busy[d] = static_cast<double>(out.popularity.count(out.doc_topic[d], doc_bucket[d]));
  std::discrete_distribution<std::size_t> busy_doc(busy.begin(), busy.end());
  std::vector<double> target_weight(C);
  accepted = 0;
  for (std::size_t attempt = 0; accepted < spec.diffusions && attempt < 20 * spec.diffusions + 100; ++attempt) {
    const auto i = static_cast<DocId>(rng.uniform() < spec.trend_bias ? busy_doc(rng) : rng.below(D));
    const std::uint32_t z = out.doc_topic[i];
    const UserId u = static_cast<UserId>(i / spec.docs_per_user);
    DocId j;
    if (rng.uniform() < spec.target_bias) {
      for (std::size_t c2 = 0; c2 < C; ++c2) target_weight[c2] = out.eta(out.doc_community[i], c2, z);
      const auto c2 = static_cast<std::uint32_t>(draw(target_weight, rng));
      const UserId v = members[c2].empty() ? static_cast<UserId>(any_famous(rng)) : members[c2][famous_in[c2](rng)];
      std::vector<DocId> same;
      for (DocId d : docs_of[v]) {
        if (out.doc_topic[d] == z) same.push_back(d);
      }
      const auto& pool = same.empty() ? docs_of[v] : same;
      j = pool[rng.below(pool.size())];
    } else {
      j = static_cast<DocId>(rng.below(D));
    }
    const UserId v = static_cast<UserId>(j / spec.docs_per_user);
    if (u == v) continue;

    double logit = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t c2 = 0; c2 < C; ++c2) {
        logit += out.eta(c, c2, z) * out.theta(c, z) * out.pi(u, c) * out.theta(c2, z) * out.pi(v, c2);
      }
    }
    logit *= spec.eta_scale;
    if (spec.topic_factor) logit += out.popularity.score(z, doc_bucket[i]);
    if (spec.individual_factor) {
      const auto f = features.pair(u, v);
      for (std::size_t k = 0; k < f.size(); ++k) logit += spec.nu[k] * f[k];
    }
    if (rng.uniform() >= sigmoid(logit)) continue;
    if (!builder.add_diffusion(i, j, doc_time[i])) continue;
    ++accepted;
  }

  out.graph = builder.build(W, spec.granularity, spec.start_time);
  return out;
}

}  // namespace comprof
