#include "comprof/scheduler.hpp"

#include <algorithm>
#include <barrier>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "comprof/error.hpp"
#include "comprof/lda.hpp"

namespace comprof {

std::vector<Segment> segment_users(const SocialGraph& graph, std::size_t topics, Rng& rng,
                                   std::size_t lda_sweeps) {
  const auto lda = run_lda(graph, topics, lda_sweeps, rng);
  std::vector<std::uint32_t> labels(graph.num_users(), 0);
  std::vector<std::size_t> votes(topics);
  for (UserId u = 0; u < graph.num_users(); ++u) {
    std::fill(votes.begin(), votes.end(), 0);
    for (DocId d : graph.documents_of(u)) ++votes[lda.dominant_topic[d]];
    labels[u] = static_cast<std::uint32_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return make_segments(graph, labels, topics);
}

std::vector<Segment> make_segments(const SocialGraph& graph, std::span<const std::uint32_t> labels,
                                   std::size_t count) {
  if (labels.size() != graph.num_users()) throw Error("segment labels do not match the user count");
  std::vector<Segment> segments(count);
  for (std::size_t s = 0; s < count; ++s) segments[s].id = static_cast<std::uint32_t>(s);
  for (UserId u = 0; u < graph.num_users(); ++u) {
    if (labels[u] >= count) throw Error("segment label out of range");
    auto& seg = segments[labels[u]];
    seg.users.push_back(u);
    seg.documents += graph.documents_of(u).size();
    seg.friendship_items += graph.friendship_edges_of(u).size();
    seg.diffusion_items += graph.diffusion_degree(u);
  }
  return segments;
}

ItemCosts ItemCosts::from_sweep(const SweepStats& stats) {
  ItemCosts costs;
  if (stats.documents > 0 && stats.document_seconds > 0) {
    costs.document = stats.document_seconds / static_cast<double>(stats.documents);
  }
  costs.friendship = stats.friendship_edges > 0 && stats.friendship_seconds > 0
                         ? stats.friendship_seconds / static_cast<double>(stats.friendship_edges)
                         : costs.document;
  costs.diffusion = stats.diffusion_edges > 0 && stats.diffusion_seconds > 0
                        ? stats.diffusion_seconds / static_cast<double>(stats.diffusion_edges)
                        : costs.document;
  return costs;
}

WorkloadEstimate estimate_workload(std::span<const Segment> segments, const ItemCosts& costs) {
  WorkloadEstimate est;
  est.costs = costs;
  est.per_segment.reserve(segments.size());
  for (const auto& seg : segments) {
    const double o = costs.document * static_cast<double>(seg.documents) +
                     costs.friendship * static_cast<double>(seg.friendship_items) +
                     costs.diffusion * static_cast<double>(seg.diffusion_items);
    est.per_segment.push_back(o);
  }
  est.total = std::accumulate(est.per_segment.begin(), est.per_segment.end(), 0.0);
  return est;
}

std::vector<std::size_t> knapsack(std::span<const double> weights, double capacity,
                                  std::size_t size_cap) {
  std::vector<std::size_t> chosen;
  if (weights.empty() || !(capacity > 0)) return chosen;
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw Error("knapsack weights must be finite and non-negative");
  }

  constexpr double kUnits = 1e5;
  const bool integral = capacity <= kUnits && std::all_of(weights.begin(), weights.end(), [](double w) {
                          return w == std::floor(w);
                        });
  const double scale = integral ? 1.0 : kUnits / capacity;
  const auto cap = static_cast<std::size_t>(std::floor(capacity * scale + 1e-9));
  std::vector<std::size_t> units(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    units[k] = static_cast<std::size_t>(std::ceil(weights[k] * scale - 1e-9));
  }

  if (weights.size() * (cap + 1) > size_cap) {
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
    double used = 0.0;
    for (std::size_t k : order) {
      if (used + weights[k] <= capacity) {
        used += weights[k];
        chosen.push_back(k);
      }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  // reach[w]: some subset of the first k items has unit weight exactly w.
  const std::size_t n = weights.size();
  std::vector<char> reach(cap + 1, 0);
  std::vector<char> take(n * (cap + 1), 0);
  reach[0] = 1;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t u = units[k];
    if (u > cap) continue;
    for (std::size_t w = cap + 1; w-- > u;) {
      if (!reach[w] && reach[w - u]) {
        reach[w] = 1;
        take[k * (cap + 1) + w] = 1;
      }
    }
  }
  std::size_t w = cap;
  while (!reach[w]) --w;
  for (std::size_t k = n; k-- > 0 && w > 0;) {
    if (take[k * (cap + 1) + w]) {
      chosen.push_back(k);
      w -= units[k];
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

Allocation allocate(std::span<const double> workloads, std::size_t workers) {
  if (workers == 0) throw Error("worker count must be positive");
  if (workloads.empty()) throw Error("allocation needs at least one segment");
  const double total = std::accumulate(workloads.begin(), workloads.end(), 0.0);
  const double capacity = total / static_cast<double>(workers);

  Allocation alloc;
  alloc.workers = workers;
  alloc.worker_of.assign(workloads.size(), static_cast<std::uint32_t>(workers - 1));
  alloc.load.assign(workers, 0.0);
  std::vector<std::size_t> remaining(workloads.size());
  std::iota(remaining.begin(), remaining.end(), 0);

  for (std::size_t m = 0; m + 1 < workers && !remaining.empty(); ++m) {
    std::vector<double> weights;
    weights.reserve(remaining.size());
    for (std::size_t s : remaining) weights.push_back(workloads[s]);
    const auto picked = knapsack(weights, capacity);
    std::vector<char> taken(remaining.size(), 0);
    for (std::size_t k : picked) {
      taken[k] = 1;
      alloc.worker_of[remaining[k]] = static_cast<std::uint32_t>(m);
      alloc.load[m] += workloads[remaining[k]];
    }
    std::vector<std::size_t> rest;
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      if (!taken[k]) rest.push_back(remaining[k]);
    }
    remaining = std::move(rest);
  }
  for (std::size_t s : remaining) alloc.load[workers - 1] += workloads[s];
  return alloc;
}

// ---------------------------------------------------------------------------

ParallelSweeper::ParallelSweeper(const GibbsSampler& sampler, std::span<const Segment> segments,
                                 const Allocation& allocation)
    : sampler_(sampler),
      users_(allocation.workers),
      friendships_(allocation.workers),
      diffusions_(allocation.workers),
      worker_seconds_(allocation.workers, 0.0) {
  if (allocation.worker_of.size() != segments.size()) {
    throw Error("allocation does not match the segment count");
  }
  const auto& graph = sampler.graph();
  std::vector<std::uint32_t> owner(graph.num_users(), UINT32_MAX);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    for (UserId u : segments[s].users) {
      if (owner[u] != UINT32_MAX) throw Error("segments overlap on user " + std::to_string(u));
      owner[u] = allocation.worker_of[s];
    }
  }
  for (UserId u = 0; u < graph.num_users(); ++u) {
    if (owner[u] == UINT32_MAX) throw Error("segments do not cover user " + std::to_string(u));
    users_[owner[u]].push_back(u);
  }
  const auto fr = graph.friendships();
  for (EdgeId e = 0; e < fr.size(); ++e) friendships_[owner[fr[e].src]].push_back(e);
  const auto df = graph.diffusions();
  for (EdgeId e = 0; e < df.size(); ++e) {
    diffusions_[owner[graph.document(df[e].src).owner]].push_back(e);
  }
}

SweepStats ParallelSweeper::sweep(LatentState& state, std::span<Rng> rngs,
                                  const SweepOptions& options) {
  const std::size_t M = workers();
  if (rngs.size() < M) throw Error("one random stream per worker is required");
  if (!sampler_.has_params() && sampler_.graph().num_diffusions() > 0) {
    throw Error("sampler parameters not set");
  }
  using Clock = std::chrono::steady_clock;
  std::vector<SweepStats> stats(M);
  const auto start = Clock::now();

  auto work = [&](std::size_t m, std::barrier<>* sync) {
    const auto t0 = Clock::now();
    GibbsSampler::Workspace ws;
    sampler_.sweep_documents(state, users_[m], rngs[m], ws, options, stats[m]);
    if (sync) sync->arrive_and_wait();
    if (options.sample_links) {
      sampler_.sweep_links(state, friendships_[m], diffusions_[m], rngs[m], ws, stats[m]);
    }
    worker_seconds_[m] = std::chrono::duration<double>(Clock::now() - t0).count();
  };

  if (M == 1) {
    work(0, nullptr);
  } else {
    std::barrier<> sync(static_cast<std::ptrdiff_t>(M));
    std::vector<std::thread> threads;
    threads.reserve(M);
    for (std::size_t m = 0; m < M; ++m) threads.emplace_back(work, m, &sync);
    for (auto& t : threads) t.join();
  }

  SweepStats total;
  for (const auto& s : stats) total.merge(s);
  total.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (options.compute_log_joint) total.log_joint = sampler_.log_joint(state, options);
  return total;
}

}  // namespace comprof
