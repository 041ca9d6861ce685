#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "comprof/corpus.hpp"
#include "comprof/gibbs.hpp"
#include "comprof/rng.hpp"

namespace comprof {

/// Users grouped by the dominant topic of their documents.
struct Segment {
  std::uint32_t id = 0;
  std::vector<UserId> users;  // ascending
  std::size_t documents = 0;
  std::size_t friendship_items = 0;  // friendship edges touching members, both directions
  std::size_t diffusion_items = 0;   // diffusion edges touching members' documents
};

/// One segment per topic. Each user joins the topic most frequent among the
/// dominant topics of her documents (ties to the lowest id) after a plain LDA
/// pre-pass of `lda_sweeps` sweeps.
std::vector<Segment> segment_users(const SocialGraph& graph, std::size_t topics, Rng& rng,
                                   std::size_t lda_sweeps = 50);

/// Segments from an explicit user -> segment map.
std::vector<Segment> make_segments(const SocialGraph& graph, std::span<const std::uint32_t> labels,
                                   std::size_t count);

/// Average seconds spent per document, friendship link and diffusion link.
struct ItemCosts {
  double document = 1.0;
  double friendship = 1.0;
  double diffusion = 1.0;

  /// Per-item averages from a serial calibration sweep; categories with no
  /// items keep unit cost relative to the document cost.
  static ItemCosts from_sweep(const SweepStats& stats);
};

struct WorkloadEstimate {
  ItemCosts costs;
  std::vector<double> per_segment;
  double total = 0.0;
};

WorkloadEstimate estimate_workload(std::span<const Segment> segments, const ItemCosts& costs);

struct Allocation {
  std::size_t workers = 0;
  std::vector<std::uint32_t> worker_of;  // per segment
  std::vector<double> load;              // per worker
};

/// Selected item indices of a 0-1 knapsack maximizing total weight within
/// capacity. Weights are scaled to integers (rounded up, capacity rounded
/// down) so the real capacity is never exceeded; above `size_cap` DP cells
/// the selection falls back to a descending greedy fill.
std::vector<std::size_t> knapsack(std::span<const double> weights, double capacity,
                                  std::size_t size_cap = 50'000'000);

/// Workers 0..M-2 in turn take a knapsack of the remaining segments with
/// capacity O/M; the last worker takes what is left.
Allocation allocate(std::span<const double> workloads, std::size_t workers);

/// Multithreaded document sweep: each worker samples the users of its
/// segments, then after a barrier the auxiliaries of the links it owns
/// (friendship links by source user, diffusion links by source document).
class ParallelSweeper {
 public:
  ParallelSweeper(const GibbsSampler& sampler, std::span<const Segment> segments,
                  const Allocation& allocation);

  std::size_t workers() const noexcept { return users_.size(); }
  /// rngs must hold one generator per worker.
  SweepStats sweep(LatentState& state, std::span<Rng> rngs, const SweepOptions& options = {});
  /// Wall time of each worker during the last sweep.
  const std::vector<double>& worker_seconds() const noexcept { return worker_seconds_; }

 private:
  const GibbsSampler& sampler_;
  std::vector<std::vector<UserId>> users_;
  std::vector<std::vector<EdgeId>> friendships_;
  std::vector<std::vector<EdgeId>> diffusions_;
  std::vector<double> worker_seconds_;
};

}  // namespace comprof
