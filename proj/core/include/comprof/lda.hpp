#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "comprof/corpus.hpp"
#include "comprof/rng.hpp"

namespace comprof {

struct LdaResult {
  std::vector<std::uint32_t> token_topics;    // flattened in document order
  std::vector<std::uint32_t> dominant_topic;  // per document, ties to lowest id
};

/// Plain token-level collapsed LDA (doc-topic and topic-word terms only).
/// alpha <= 0 means 50 / topics.
LdaResult run_lda(const SocialGraph& graph, std::size_t topics, std::size_t sweeps, Rng& rng,
                  double alpha = 0.0, double beta = 0.1);

}  // namespace comprof
