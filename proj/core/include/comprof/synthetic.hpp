#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "comprof/corpus.hpp"
#include "comprof/model.hpp"
#include "comprof/rng.hpp"

namespace comprof {

/// Knobs for the planted-truth generator. Planted profiles are built from the
/// purity fields: user u belongs mostly to community u % C, community c talks
/// mostly about topics z with z % C == c, and topic z owns a contiguous block
/// of words.
struct SyntheticSpec {
  std::size_t users = 500;
  std::size_t communities = 4;
  std::size_t topics = 8;
  std::size_t words = 400;
  std::size_t docs_per_user = 20;
  std::size_t tokens_per_doc = 8;
  std::size_t friendships = 4000;  // target edge counts
  std::size_t diffusions = 4000;

  double community_purity = 0.85;
  double topic_purity = 0.8;
  double word_purity = 0.9;
  double eta_self = 0.7;  // mass of each planted eta slice on c' == c

  Bucket buckets = 20;
  std::int64_t granularity = 86400;
  std::int64_t start_time = 1'600'000'000;
  double peak_share = 0.6;  // documents posted near their topic's peak bucket

  double fame_sigma = 1.0;           // lognormal spread of user attractiveness
  double same_community_bias = 0.8;  // friendship proposals inside the main community
  double trend_bias = 0.7;           // diffusion sources drawn from busy (topic, bucket) cells
  double target_bias = 0.8;          // diffusion targets drawn by community, topic and fame

  // Diffusion acceptance: sigmoid(eta_scale * community term + popularity + nu . f).
  double eta_scale = 4.0;
  NuVector nu{0.0, 0.0, 1.0, 0.0};
  bool topic_factor = true;
  bool individual_factor = true;

  /// Throws Error naming the first bad field.
  void validate() const;
  bool operator==(const SyntheticSpec&) const = default;
};

void to_json(nlohmann::json& j, const SyntheticSpec& spec);
void from_json(const nlohmann::json& j, SyntheticSpec& spec);
/// Missing keys keep their defaults; unknown keys are an error.
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

struct SyntheticData {
  SocialGraph graph;
  Vocabulary vocabulary;
  Matrix pi;      // users x communities
  Matrix theta;   // communities x topics
  Matrix phi;     // topics x words
  EtaTensor eta;  // slices normalized over (c', z)
  NuVector nu{};
  std::vector<std::uint32_t> user_community;  // argmax of each pi row
  std::vector<std::uint32_t> doc_community;
  std::vector<std::uint32_t> doc_topic;
  TopicPopularity popularity;
};

/// Samples documents from the planted multinomials, then friendship and
/// diffusion links from biased candidate proposals accepted by the link
/// probabilities of the model.
SyntheticData generate(const SyntheticSpec& spec, Rng& rng);

}  // namespace comprof
