#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "comprof/corpus.hpp"
#include "comprof/model.hpp"
#include "comprof/rng.hpp"

namespace testing_helpers {

struct DocSpec {
  comprof::UserId owner;
  std::vector<comprof::WordId> tokens;
  std::int64_t timestamp = 0;
};

inline comprof::SocialGraph make_graph(std::size_t users, const std::vector<DocSpec>& docs,
                                       const std::vector<std::pair<comprof::UserId, comprof::UserId>>& friendships,
                                       const std::vector<std::pair<comprof::DocId, comprof::DocId>>& diffusions,
                                       std::size_t words, std::int64_t granularity = 1) {
  comprof::GraphBuilder b;
  for (std::size_t u = 0; u < users; ++u) b.add_user("u" + std::to_string(u));
  for (std::size_t d = 0; d < docs.size(); ++d) {
    b.add_document("d" + std::to_string(d), docs[d].owner, docs[d].tokens, docs[d].timestamp);
  }
  for (auto [s, t] : friendships) b.add_friendship(s, t);
  for (auto [i, j] : diffusions) b.add_diffusion(i, j, docs[i].timestamp);
  return b.build(words, granularity, 0);
}

// Random graph with every user owning at least one document.
inline comprof::SocialGraph random_graph(std::size_t users, std::size_t docs, std::size_t words,
                                         std::size_t friendships, std::size_t diffusions,
                                         comprof::Rng& rng, std::int64_t buckets = 4) {
  std::vector<DocSpec> spec;
  for (std::size_t d = 0; d < docs; ++d) {
    DocSpec s{static_cast<comprof::UserId>(d < users ? d : rng.below(users)), {}, 0};
    const std::size_t len = 1 + rng.below(5);
    for (std::size_t k = 0; k < len; ++k) s.tokens.push_back(static_cast<comprof::WordId>(rng.below(words)));
    s.timestamp = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(buckets)));
    spec.push_back(std::move(s));
  }
  std::vector<std::pair<comprof::UserId, comprof::UserId>> f;
  for (std::size_t k = 0; k < friendships; ++k) {
    const auto u = static_cast<comprof::UserId>(rng.below(users)), v = static_cast<comprof::UserId>(rng.below(users));
    if (u != v) f.emplace_back(u, v);
  }
  std::vector<std::pair<comprof::DocId, comprof::DocId>> e;
  for (std::size_t k = 0; k < diffusions; ++k) {
    const auto i = static_cast<comprof::DocId>(rng.below(docs)), j = static_cast<comprof::DocId>(rng.below(docs));
    if (i != j) e.emplace_back(i, j);
  }
  return make_graph(users, spec, f, e, words);
}

inline comprof::Matrix random_stochastic(std::size_t rows, std::size_t cols, comprof::Rng& rng) {
  comprof::Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += (m(r, c) = 0.05 + rng.uniform());
    for (std::size_t c = 0; c < cols; ++c) m(r, c) /= total;
  }
  return m;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("comprof-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(COMPROF_FIXTURE_DIR) / name;
}

}  // namespace testing_helpers
