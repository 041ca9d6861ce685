#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "comprof/corpus.hpp"
#include "comprof/gibbs.hpp"
#include "comprof/model.hpp"
#include "comprof/rng.hpp"
#include "comprof/scheduler.hpp"

namespace comprof {

struct Snapshot;

// ---------------------------------------------------------------------------
// Individual-preference weights

/// One labelled document pair for the nu regression: logit = offset + nu . f.
struct NuSample {
  double offset = 0.0;
  PairFeatures::Vector features{};
  double label = 0.0;
};

/// Mean logistic negative log-likelihood over the samples.
class NuObjective {
 public:
  explicit NuObjective(std::vector<NuSample> samples);

  double value(const NuVector& nu) const;
  NuVector gradient(const NuVector& nu) const;
  /// Root mean square of each feature (1 where a feature is identically 0).
  const NuVector& feature_scale() const noexcept { return scale_; }
  std::size_t size() const noexcept { return samples_.size(); }

 private:
  std::vector<NuSample> samples_;
  NuVector scale_{};
};

/// `steps` diagonally preconditioned gradient steps from `start`:
/// nu_k -= learning_rate * g_k / scale_k^2. Throws Error on a non-finite
/// gradient or iterate.
NuVector fit_nu(const NuObjective& objective, const NuVector& start, std::size_t steps,
                double learning_rate);

/// Observed diffusion edges (label 1) plus uniformly drawn document pairs
/// outside the edge set (label 0), `negative_ratio` per edge. The offset
/// holds the community and popularity terms under `params`.
std::vector<NuSample> nu_samples(const GibbsSampler& sampler, const LatentState& state,
                                 const PairFeatures& features, const LinkParams& params,
                                 double negative_ratio, Rng& rng);

// ---------------------------------------------------------------------------
// Training loop

struct TrainConfig {
  Hyperparams hyper;
  AblationConfig ablation;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t lda_sweeps = 50;
  bool compute_log_joint = true;
  bool track_perplexity = true;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double log_joint = 0.0;
  double perplexity = 0.0;
  double estep_seconds = 0.0;
  double mstep_seconds = 0.0;
  std::size_t topic_moves = 0;
  std::size_t community_moves = 0;
};

struct TrainReport {
  std::vector<IterationRecord> iterations;
  std::vector<double> worker_seconds;  // last sweep, one entry per worker

  void write_csv(const std::filesystem::path& path) const;
};

/// Alternates sampling sweeps with the eta / popularity / nu updates.
/// Read-out estimates of pi, theta and phi average every post-burn-in
/// iteration.
class Trainer {
 public:
  Trainer(const SocialGraph& graph, const TrainConfig& config);
  ~Trainer();
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  /// Continues a run captured by snapshot(); the graph must be the one the
  /// snapshot was trained on.
  static std::unique_ptr<Trainer> resume(const SocialGraph& graph, const Snapshot& snapshot,
                                         std::size_t workers = 1);

  const IterationRecord& step();
  /// Runs the remaining iterations.
  const TrainReport& run();
  bool done() const noexcept { return iteration_ >= config_.hyper.iterations; }
  std::size_t iteration() const noexcept { return iteration_; }

  const LatentState& state() const noexcept { return state_; }
  const LinkParams& link_params() const noexcept { return link_; }
  const TrainReport& report() const noexcept { return report_; }
  const TrainConfig& config() const noexcept { return config_; }
  const PairFeatures& features() const noexcept { return features_; }
  const GibbsSampler& sampler() const noexcept { return *sampler_; }

  /// pi, theta, phi from the current counters plus the current link params.
  ModelParams current_params() const;
  /// Averaged read-out; falls back to current_params() before burn-in ends.
  ModelParams params() const;

  Snapshot snapshot(const Vocabulary& vocabulary) const;

 private:
  struct ResumeTag {};
  Trainer(const SocialGraph& graph, const TrainConfig& config, ResumeTag);
  void setup_workers();
  void m_step();
  SweepOptions sweep_options() const;

  const SocialGraph& graph_;
  TrainConfig config_;
  PairFeatures features_;
  std::unique_ptr<GibbsSampler> sampler_;
  LatentState state_;
  LinkParams link_;
  Rng rng_;
  std::vector<Rng> worker_rngs_;
  std::vector<Segment> segments_;
  std::unique_ptr<ParallelSweeper> parallel_;
  std::size_t iteration_ = 0;
  TrainReport report_;

  Matrix pi_sum_;
  Matrix theta_sum_;
  Matrix phi_sum_;
  std::uint64_t samples_ = 0;
};

/// Convenience wrapper: construct and run.
struct TrainResult {
  LatentState state;
  ModelParams params;
  TrainReport report;
};
TrainResult train(const SocialGraph& graph, const TrainConfig& config);

}  // namespace comprof
