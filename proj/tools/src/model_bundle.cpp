#include "comprof/tools/model_bundle.hpp"

#include <limits>

#include "comprof/apps.hpp"
#include "comprof/tokenizer.hpp"

namespace comprof::tools {

std::shared_ptr<const ModelBundle> load_bundle(const std::filesystem::path& snapshot,
                                               const std::filesystem::path& graph_dir,
                                               const IngestOptions& ingest_options) {
  auto bundle = std::make_shared<ModelBundle>();
  bundle->snapshot = load_snapshot(snapshot);
  if (!graph_dir.empty()) {
    auto result = ingest(IngestPaths::in_directory(graph_dir), ingest_options);
    const auto& s = bundle->snapshot;
    const auto& g = result.graph;
    if (g.num_users() != s.users || g.num_documents() != s.documents || g.num_words() != s.words) {
      throw Error("graph " + graph_dir.string() + " does not match the snapshot (" +
                  std::to_string(g.num_users()) + " users, " + std::to_string(g.num_documents()) +
                  " documents, " + std::to_string(g.num_words()) + " words vs " +
                  std::to_string(s.users) + ", " + std::to_string(s.documents) + ", " +
                  std::to_string(s.words) + ")");
    }
    if (!(result.vocabulary == s.vocabulary)) {
      throw Error("graph " + graph_dir.string() + " has a different vocabulary than the snapshot");
    }
    bundle->features.emplace(result.graph);
    bundle->graph.emplace(std::move(result.graph));
  }
  return bundle;
}

std::string rank_payload(const ModelBundle& model, const std::string& query, std::size_t k) {
  const auto tokens = Tokenizer::without_stopwords().tokenize(query);
  if (tokens.empty()) throw Error("query has no tokens");
  return to_json(rank_communities(tokens, k, model.params(), model.vocabulary())).dump();
}

nlohmann::ordered_json predict_payload(const ModelBundle& model, const std::string& u,
                                       const std::string& v, const std::string& doc,
                                       std::optional<std::int64_t> timestamp) {
  if (!model.graph) throw Error("prediction needs the training graph");
  const auto& graph = *model.graph;
  const auto uid = graph.find_user(u);
  if (!uid) throw NotFound("unknown user '" + u + "'");
  const auto vid = graph.find_user(v);
  if (!vid) throw NotFound("unknown user '" + v + "'");
  const auto did = graph.find_document(doc);
  if (!did) throw NotFound("unknown document '" + doc + "'");
  const auto& document = graph.document(*did);
  const Bucket t = timestamp ? graph.time().bucket_of(*timestamp) : document.bucket;
  const double p = predict_diffusion(model.params(), model.snapshot.ablation, *model.features, *uid,
                                     *vid, document.tokens, t);
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["u"] = u;
  j["v"] = v;
  j["doc"] = doc;
  j["bucket"] = t;
  j["probability"] = p;
  return j;
}

namespace {

template <typename T>
void read_number(const nlohmann::json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number()) throw Error(std::string("'") + key + "' must be a number");
  if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer() || (std::is_unsigned_v<T> && it->get<std::int64_t>() < 0)) {
      throw Error(std::string("'") + key + "' must be a non-negative integer");
    }
  }
  out = it->get<T>();
}

}  // namespace

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base) {
  if (!j.is_object()) throw Error("training config must be a JSON object");
  static const char* const known[] = {
      "communities", "topics",  "alpha",       "rho",        "beta",
      "iterations",  "nu_steps", "learning_rate", "negative_ratio", "burn_in",
      "popularity_transform", "ablation", "seed", "workers", "lda_sweeps"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw Error("unknown training config key '" + key + "'");
    }
  }
  auto& h = base.hyper;
  read_number(j, "communities", h.communities);
  read_number(j, "topics", h.topics);
  read_number(j, "alpha", h.alpha);
  read_number(j, "rho", h.rho);
  read_number(j, "beta", h.beta);
  read_number(j, "iterations", h.iterations);
  read_number(j, "nu_steps", h.nu_steps);
  read_number(j, "learning_rate", h.learning_rate);
  read_number(j, "negative_ratio", h.negative_ratio);
  read_number(j, "burn_in", h.burn_in);
  read_number(j, "seed", base.seed);
  read_number(j, "workers", base.workers);
  read_number(j, "lda_sweeps", base.lda_sweeps);
  if (j.contains("popularity_transform")) {
    if (!j["popularity_transform"].is_string()) throw Error("'popularity_transform' must be a string");
    h.popularity_transform = parse_popularity_transform(j["popularity_transform"].get<std::string>());
  }
  if (j.contains("ablation")) {
    if (!j["ablation"].is_string()) throw Error("'ablation' must be a string");
    base.ablation = AblationConfig::parse(j["ablation"].get<std::string>());
  }
  if (base.workers == 0) throw Error("workers must be positive");
  h.validate();
  return base;
}

}  // namespace comprof::tools
