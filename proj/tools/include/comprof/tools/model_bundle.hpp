#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "comprof/corpus.hpp"
#include "comprof/error.hpp"
#include "comprof/snapshot.hpp"
#include "comprof/trainer.hpp"

namespace comprof::tools {

/// A loaded snapshot, optionally paired with the graph it was trained on.
struct ModelBundle {
  Snapshot snapshot;
  std::optional<SocialGraph> graph;
  std::optional<PairFeatures> features;

  const ModelParams& params() const { return snapshot.params; }
  const Vocabulary& vocabulary() const { return snapshot.vocabulary; }
};

/// Loads the snapshot and, when `graph_dir` is non-empty, ingests the graph
/// and checks that its dimensions and vocabulary match the snapshot.
std::shared_ptr<const ModelBundle> load_bundle(const std::filesystem::path& snapshot,
                                               const std::filesystem::path& graph_dir,
                                               const IngestOptions& ingest = {});

/// Ranking payload shared by the CLI and the service so both emit the same
/// bytes. Throws Error when no query token is known.
std::string rank_payload(const ModelBundle& model, const std::string& query, std::size_t k);

/// Diffusion probability payload; user and document are given by name, the
/// time as a raw timestamp (the document's own bucket when absent).
nlohmann::ordered_json predict_payload(const ModelBundle& model, const std::string& u,
                                       const std::string& v, const std::string& doc,
                                       std::optional<std::int64_t> timestamp);

/// Overrides fields of `base` from a JSON object with the CLI option names
/// (communities, topics, alpha, ..., ablation, seed, workers). Unknown keys
/// and bad values raise Error.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Raised for ids that do not exist (HTTP 404).
class NotFound : public Error {
 public:
  using Error::Error;
};

}  // namespace comprof::tools
