// Usage: comprof_acceptance N. Runs acceptance check N (1-9) and prints one
// "criterion N: PASS|FAIL ..." line; the exit status is 0 only on PASS.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "comprof/eval.hpp"
#include "comprof/gibbs.hpp"
#include "comprof/polya_gamma.hpp"
#include "comprof/scheduler.hpp"
#include "comprof/snapshot.hpp"
#include "comprof/synthetic.hpp"
#include "comprof/trainer.hpp"

using namespace comprof;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

// The planted benchmark shared by checks 4-6.
SyntheticData planted() {
  SyntheticSpec spec;
  Rng rng(42, 0);
  return generate(spec, rng);
}

TrainConfig planted_config() {
  TrainConfig c;
  c.hyper.communities = 4;
  c.hyper.topics = 8;
  c.hyper.iterations = 100;
  c.compute_log_joint = false;
  c.track_perplexity = false;
  return c;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Outcome pg_moments() {
  Rng rng(1, 0);
  bool ok = true;
  std::string detail;
  for (double c : {0.1, 1.0, 4.0}) {
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += sample_pg1(c, rng).value;
    const double expected = std::tanh(c / 2) / (2 * c);
    const double rel = std::abs(sum / n - expected) / expected;
    ok = ok && rel <= 0.02;
    detail += "c=" + fmt(c) + " rel_err=" + fmt(rel, 3) + " ";
  }
  return {ok, detail};
}

Outcome mixture_identity() {
  Rng rng(2, 0);
  bool ok = true;
  std::string detail;
  for (double w : {-2.0, 0.0, 2.0}) {
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = 0.5 * psi(w, sample_pg1(0.0, rng).value);
      sum += v;
      sq += v * v;
    }
    const double m = sum / n;
    const double se = std::sqrt((sq / n - m * m) / n);
    // psi(0, x) = 1 for every x, so w = 0 has no spread and must match exactly.
    const double diff = std::abs(m - sigmoid(w));
    const double z = se > 0 ? diff / se : (diff == 0 ? 0.0 : INFINITY);
    ok = ok && z <= 3.0;
    detail += "w=" + fmt(w) + " z=" + fmt(z, 3) + " ";
  }
  return {ok, detail};
}

Outcome gibbs_correctness() {
  GraphBuilder b;
  b.add_user("a");
  b.add_user("b");
  b.add_document("a1", 0, {0}, 0);
  b.add_document("b1", 1, {0}, 0);
  b.add_friendship(0, 1);
  b.add_diffusion(0, 1, 0);
  const auto graph = b.build(1, 1, 0);
  const PairFeatures features(graph);
  Hyperparams hyper;
  hyper.communities = 2;
  hyper.topics = 2;
  hyper.alpha = 0.5;
  hyper.rho = 0.5;
  LinkParams params{EtaTensor(2, 2, 0.5), {0.3, -0.2, 0.4, 0.1}, TopicPopularity(2, 1)};
  params.eta(0, 0, 0) = 3.0;
  params.eta(1, 1, 1) = -2.0;
  params.eta(0, 1, 1) = 1.5;
  params.popularity.refresh();

  GibbsSampler sampler(graph, features, hyper, AblationConfig{});
  sampler.set_params(params);
  Rng rng(3, 0);
  auto state = LatentState::random(graph, 2, 2, rng);
  SweepOptions opts;
  opts.compute_log_joint = false;
  const std::size_t K = 4;
  std::vector<double> hist(K * K, 0.0);
  const int burn = 1000, sweeps = 100000;
  for (int s = 0; s < burn + sweeps; ++s) {
    sampler.sweep(state, rng, opts);
    if (s < burn) continue;
    const std::size_t idx = (state.community[0] * 2 + state.topic[0]) + K * (state.community[1] * 2 + state.topic[1]);
    hist[idx] += 1.0;
  }
  const auto exact = enumerate_collapsed_joint(graph, hyper, params, features);
  double tv = 0.0;
  for (std::size_t i = 0; i < hist.size(); ++i) tv += std::abs(hist[i] / sweeps - exact[i]);
  tv /= 2;
  return {tv <= 0.05, "total_variation=" + fmt(tv, 3)};
}

Outcome planted_recovery() {
  const auto data = planted();
  Trainer trainer(data.graph, planted_config());
  trainer.run();
  const auto top = top_communities(trainer.params().pi, 1);
  std::vector<std::uint32_t> labels;
  for (const auto& r : top) labels.push_back(r.front());
  const double score = nmi(labels, data.user_community);
  return {score >= 0.7, "nmi=" + fmt(score)};
}

Outcome ablation_ordering() {
  const auto data = planted();
  auto config = planted_config();
  CrossValidationOptions opts;
  opts.folds = 10;
  std::vector<double> means;
  for (const char* name : {"full", "no-topic", "no-individual-topic"}) {
    config.ablation = AblationConfig::parse(name);
    means.push_back(mean(diffusion_auc_folds(data.graph, config, opts)));
  }
  const bool ok = means[0] - means[1] >= 0.01 && means[1] - means[2] >= 0.01;
  return {ok, "auc full=" + fmt(means[0]) + " no-topic=" + fmt(means[1]) + " no-individual-topic=" + fmt(means[2])};
}

Outcome joint_beats_aggregation() {
  const auto data = planted();
  CrossValidationOptions opts;
  opts.folds = 10;
  const auto folds = perplexity_folds(data.graph, planted_config(), opts);
  double joint = 0.0, agg = 0.0;
  for (const auto& f : folds) {
    joint += f.joint;
    agg += f.aggregated;
  }
  joint /= static_cast<double>(folds.size());
  agg /= static_cast<double>(folds.size());
  return {joint < agg, "perplexity joint=" + fmt(joint, 5) + " aggregated=" + fmt(agg, 5)};
}

double median_sweep_seconds(const std::function<void()>& sweep, int reps) {
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    sweep();
    t.push_back(seconds_since(t0));
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

Outcome scaling() {
  const std::size_t C = 4, Z = 8;
  Hyperparams hyper;
  hyper.communities = C;
  hyper.topics = Z;
  SweepOptions opts;
  opts.compute_log_joint = false;

  std::vector<double> sizes, times;
  SyntheticData largest;
  for (std::size_t users : {200u, 400u, 600u, 800u, 1000u}) {
    SyntheticSpec spec;
    spec.users = users;
    spec.friendships = users * 8;
    spec.diffusions = users * 8;
    Rng rng(70 + users, 0);
    auto data = generate(spec, rng);
    const PairFeatures features(data.graph);
    GibbsSampler sampler(data.graph, features, hyper, AblationConfig{});
    auto state = LatentState::random(data.graph, C, Z, rng);
    LinkParams params{EtaTensor::uniform(C, Z), {}, topic_popularity(state.topic, Z, data.graph)};
    sampler.set_params(params);
    sampler.sweep(state, rng, opts);
    times.push_back(median_sweep_seconds([&] { sampler.sweep(state, rng, opts); }, 5));
    sizes.push_back(static_cast<double>(data.graph.num_tokens() + data.graph.num_friendships() +
                                        data.graph.num_diffusions()));
    if (users == 1000) largest = std::move(data);
  }
  const double mx = mean(sizes), my = mean(times);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    sxy += (sizes[i] - mx) * (times[i] - my);
    sxx += (sizes[i] - mx) * (sizes[i] - mx);
    syy += (times[i] - my) * (times[i] - my);
  }
  const double r2 = sxy * sxy / (sxx * syy);

  const auto& graph = largest.graph;
  const PairFeatures features(graph);
  GibbsSampler sampler(graph, features, hyper, AblationConfig{});
  Rng rng(80, 0);
  auto state = LatentState::random(graph, C, Z, rng);
  LinkParams params{EtaTensor::uniform(C, Z), {}, topic_popularity(state.topic, Z, graph)};
  sampler.set_params(params);
  const auto segments = segment_users(graph, Z, rng, 20);
  std::size_t non_empty = 0;
  for (const auto& s : segments) non_empty += !s.users.empty();
  const auto calib = sampler.sweep(state, rng, opts);
  const auto workload = estimate_workload(segments, ItemCosts::from_sweep(calib));
  const auto allocation = allocate(workload.per_segment, 4);
  ParallelSweeper parallel(sampler, segments, allocation);
  std::vector<Rng> rngs;
  for (std::uint64_t m = 0; m < 4; ++m) rngs.push_back(Rng(81, 1).split(m));

  const double serial = median_sweep_seconds([&] { sampler.sweep(state, rng, opts); }, 5);
  const double threaded = median_sweep_seconds([&] { parallel.sweep(state, rngs, opts); }, 5);
  const double speedup = serial / threaded;
  const bool ok = r2 >= 0.98 && speedup >= 2.0 && non_empty >= 8;
  return {ok, "r2=" + fmt(r2) + " speedup_4_workers=" + fmt(speedup, 3) + " segments=" + std::to_string(non_empty) +
                  " hardware_threads=" + std::to_string(std::thread::hardware_concurrency())};
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-9; }

SocialGraph graph_of(std::size_t users, const std::vector<std::pair<UserId, UserId>>& friendships) {
  GraphBuilder b;
  for (std::size_t u = 0; u < users; ++u) {
    b.add_user("u" + std::to_string(u));
    b.add_document("d" + std::to_string(u), static_cast<UserId>(u), {0}, 0);
  }
  for (auto [s, t] : friendships) b.add_friendship(s, t);
  return b.build(1, 1, 0);
}

Outcome metric_oracles() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* name) {
    if (!ok) failed.push_back(name);
  };

  // Conductance.
  const auto cliques = graph_of(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  check(near(conductance(cliques, {{0}, {0}, {0}, {1}, {1}, {1}}, 2), 0.0), "conductance-cliques");
  const auto bipartite = graph_of(4, {{0, 2}, {0, 3}, {1, 2}, {1, 3}});
  check(near(conductance(bipartite, {{0}, {0}, {1}, {1}}, 2), 1.0), "conductance-bipartite");
  {
    // Path 0-1-2-3 with 4-0: community {0,1}: cut 2 ({1,2},{4,0}), vol 4, other vol 4 -> 0.5.
    // Community {2,3,4}: same cut, vol 4 -> 0.5.
    const auto path = graph_of(5, {{0, 1}, {1, 2}, {2, 3}, {4, 0}});
    check(near(conductance(path, {{0}, {0}, {1}, {1}, {1}}, 2), 0.5), "conductance-path");
  }

  // AUC.
  const std::vector<double> pos{0.9, 0.4}, neg{0.5, 0.1}, same{0.3, 0.3}, hi{3, 4}, lo{1, 2};
  check(near(auc(pos, neg), 0.75), "auc-hand");
  check(near(auc(same, same), 0.5), "auc-ties");
  check(near(auc(hi, lo), 1.0), "auc-separated");

  // Ranking metrics: two queries over three users.
  {
    const std::vector<std::vector<std::uint32_t>> rankings{{0, 1}, {1, 0}};
    const std::vector<std::vector<UserId>> relevant{{0, 2}, {1}};
    const std::vector<std::vector<std::uint32_t>> membership{{0}, {1}, {0, 1}};
    const auto m = rank_metrics(rankings, relevant, membership, 2);
    check(near(m.map[0], 0.75) && near(m.map[1], 0.625), "map-hand");
    check(near(m.mar[0], 1.0) && near(m.mar[1], 1.0), "mar-hand");
    check(near(m.maf[1], 10.0 / 13.0), "maf-hand");
    const std::vector<std::vector<std::uint32_t>> perfect{{0}};
    const std::vector<std::vector<UserId>> rel{{0, 1}};
    const auto p = rank_metrics(perfect, rel, {{0}, {0}}, 1);
    check(near(p.maf[0], 1.0), "maf-perfect");
  }

  // Perplexity.
  {
    GraphBuilder b;
    b.add_user("u");
    b.add_document("d", 0, {0, 1}, 0);
    const auto g = b.build(2, 1, 0);
    Matrix phi(2, 2);
    phi(0, 0) = 0.8;
    phi(0, 1) = 0.2;
    phi(1, 0) = 0.4;
    phi(1, 1) = 0.6;
    check(near(perplexity(g, Matrix(1, 1, 1.0), Matrix(1, 2, 0.5), phi), 1.0 / std::sqrt(0.6 * 0.4)), "perplexity-hand");
    check(near(perplexity(g, Matrix(1, 1, 1.0), Matrix(1, 1, 1.0), Matrix(1, 2, 0.5)), 2.0), "perplexity-uniform");
    const auto one = graph_of(1, {});
    check(near(perplexity(one, Matrix(1, 1, 1.0), Matrix(1, 1, 1.0), Matrix(1, 1, 1.0)), 1.0), "perplexity-one-word");
  }

  std::string detail = failed.empty() ? "all metric oracles match" : "mismatch:";
  for (const auto& f : failed) detail += " " + f;
  return {failed.empty(), detail};
}

Outcome consistency_and_determinism() {
  SyntheticSpec spec;
  spec.users = 120;
  spec.docs_per_user = 10;
  spec.friendships = 800;
  spec.diffusions = 800;
  Rng rng(90, 0);
  const auto data = generate(spec, rng);
  TrainConfig config;
  config.hyper.communities = 4;
  config.hyper.topics = 8;
  config.hyper.iterations = 20;
  config.lda_sweeps = 10;

  std::size_t bad = 0, checked = 0;
  for (std::size_t workers : {1u, 4u}) {
    config.workers = workers;
    Trainer t(data.graph, config);
    while (!t.done()) {
      t.step();
      ++checked;
      bad += !t.state().counters_equal(t.state().recount(data.graph));
    }
  }
  config.workers = 1;
  Trainer a(data.graph, config), b(data.graph, config);
  a.run();
  b.run();
  const bool same = encode_snapshot(a.snapshot(data.vocabulary)) == encode_snapshot(b.snapshot(data.vocabulary));
  return {bad == 0 && same, "recount_mismatches=" + std::to_string(bad) + "/" + std::to_string(checked) +
                                " identical_snapshots=" + (same ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: comprof_acceptance N (1-9)\n");
    return 2;
  }
  const int n = std::atoi(argv[1]);
  const std::vector<std::pair<std::function<Outcome()>, double>> checks{
      {pg_moments, 10},         {mixture_identity, 10},        {gibbs_correctness, 300},
      {planted_recovery, 600},  {ablation_ordering, 900},      {joint_beats_aggregation, 900},
      {scaling, 1200},          {metric_oracles, 60},          {consistency_and_determinism, 120}};
  if (n < 1 || n > static_cast<int>(checks.size())) {
    std::fprintf(stderr, "unknown criterion %s\n", argv[1]);
    return 2;
  }
  const auto& [run, limit] = checks[static_cast<std::size_t>(n - 1)];
  const auto t0 = Clock::now();
  Outcome result;
  try {
    result = run();
  } catch (const std::exception& e) {
    result = {false, std::string("exception: ") + e.what()};
  }
  const double elapsed = seconds_since(t0);
  const bool in_time = elapsed < limit;
  const bool pass = result.pass && in_time;
  std::printf("criterion %d: %s %s seconds=%s limit=%s\n", n, pass ? "PASS" : "FAIL", result.detail.c_str(),
              fmt(elapsed, 4).c_str(), fmt(limit, 4).c_str());
  return pass ? 0 : 1;
}
