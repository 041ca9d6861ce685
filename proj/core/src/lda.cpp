#include "comprof/lda.hpp"

#include "comprof/error.hpp"

namespace comprof {

LdaResult run_lda(const SocialGraph& graph, std::size_t topics, std::size_t sweeps, Rng& rng,
                  double alpha, double beta) {
  if (topics == 0) throw Error("LDA needs at least one topic");
  if (alpha <= 0) alpha = 50.0 / static_cast<double>(topics);
  const std::size_t Z = topics, W = graph.num_words();
  const double w_beta = static_cast<double>(W) * beta;

  std::vector<std::int32_t> doc_topic(graph.num_documents() * Z, 0);
  std::vector<std::int32_t> topic_word(Z * W, 0);
  std::vector<std::int32_t> topic_total(Z, 0);
  LdaResult result;
  result.token_topics.resize(graph.num_tokens());

  std::size_t pos = 0;
  for (DocId d = 0; d < graph.num_documents(); ++d) {
    for (WordId w : graph.document(d).tokens) {
      const auto z = static_cast<std::uint32_t>(rng.below(Z));
      result.token_topics[pos++] = z;
      ++doc_topic[d * Z + z];
      ++topic_word[z * W + w];
      ++topic_total[z];
    }
  }

  std::vector<double> cumulative(Z);
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    pos = 0;
    for (DocId d = 0; d < graph.num_documents(); ++d) {
      std::int32_t* nd = doc_topic.data() + d * Z;
      for (WordId w : graph.document(d).tokens) {
        auto& z = result.token_topics[pos++];
        --nd[z];
        --topic_word[z * W + w];
        --topic_total[z];
        double total = 0.0;
        for (std::size_t k = 0; k < Z; ++k) {
          total += (nd[k] + alpha) * (topic_word[k * W + w] + beta) / (topic_total[k] + w_beta);
          cumulative[k] = total;
        }
        const double target = rng.uniform() * total;
        std::size_t k = 0;
        while (k + 1 < Z && cumulative[k] <= target) ++k;
        z = static_cast<std::uint32_t>(k);
        ++nd[z];
        ++topic_word[z * W + w];
        ++topic_total[z];
      }
    }
  }

  result.dominant_topic.resize(graph.num_documents());
  for (DocId d = 0; d < graph.num_documents(); ++d) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < Z; ++k) {
      if (doc_topic[d * Z + k] > doc_topic[d * Z + best]) best = k;
    }
    result.dominant_topic[d] = static_cast<std::uint32_t>(best);
  }
  return result;
}

}  // namespace comprof
