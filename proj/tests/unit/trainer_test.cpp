#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "comprof/error.hpp"
#include "comprof/polya_gamma.hpp"
#include "comprof/snapshot.hpp"
#include "comprof/synthetic.hpp"
#include "comprof/trainer.hpp"
#include "helpers.hpp"

using namespace comprof;
using namespace testing_helpers;

namespace {

std::vector<NuSample> random_samples(std::size_t n, Rng& rng, const NuVector& truth, bool offsets) {
  std::vector<NuSample> out(n);
  for (auto& s : out) {
    for (auto& f : s.features) f = 2.0 * rng.uniform();
    s.offset = offsets ? rng.normal() : 0.0;
    double logit = s.offset;
    for (int k = 0; k < 4; ++k) logit += truth[k] * s.features[k];
    s.label = rng.uniform() < sigmoid(logit) ? 1.0 : 0.0;
  }
  return out;
}

SyntheticData small_synthetic(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.users = 60;
  spec.communities = 3;
  spec.topics = 4;
  spec.words = 60;
  spec.docs_per_user = 6;
  spec.friendships = 300;
  spec.diffusions = 300;
  Rng rng(seed, 0);
  return generate(spec, rng);
}

TrainConfig small_config(std::size_t iterations) {
  TrainConfig c;
  c.hyper.communities = 3;
  c.hyper.topics = 4;
  c.hyper.iterations = iterations;
  c.lda_sweeps = 5;
  return c;
}

}  // namespace

TEST(NuObjective, GradientMatchesFiniteDifferences) {
  Rng rng(60, 0);
  const NuObjective obj(random_samples(500, rng, {0.5, -1.0, 0.3, 0.8}, true));
  const NuVector nu{0.2, -0.4, 0.1, 0.3};
  const auto g = obj.gradient(nu);
  for (int k = 0; k < 4; ++k) {
    const double h = 1e-5;
    NuVector up = nu, down = nu;
    up[k] += h;
    down[k] -= h;
    const double fd = (obj.value(up) - obj.value(down)) / (2 * h);
    EXPECT_NEAR(g[k], fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST(NuObjective, NonIncreasingUnderDefaultStep) {
  Rng rng(61, 0);
  const NuObjective obj(random_samples(2000, rng, {1.0, 0.5, -0.5, 0.0}, true));
  NuVector nu{};
  double prev = obj.value(nu);
  for (int step = 0; step < 20; ++step) {
    nu = fit_nu(obj, nu, 1, Hyperparams{}.learning_rate);
    const double cur = obj.value(nu);
    EXPECT_LE(cur, prev + 1e-12);
    prev = cur;
  }
}

TEST(NuObjective, RecoversPlantedWeights) {
  Rng rng(62, 0);
  const NuVector truth{1.0, 0.0, 0.0, 0.0};
  const NuObjective obj(random_samples(10000, rng, truth, false));
  NuVector nu{};
  // Warm-started rounds, as across M-steps.
  for (int round = 0; round < 100; ++round) nu = fit_nu(obj, nu, 20, 0.05);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(nu[k], truth[k], 0.2) << "k=" << k;
}

TEST(NuObjective, DivergenceSuggestsSmallerRate) {
  std::vector<NuSample> s(2);
  s[0].features = {1e200, 0, 0, 0};
  s[0].label = 1;
  s[1].features = {1.0, 0, 0, 0};
  const NuObjective obj(s);
  try {
    fit_nu(obj, {}, 50, 1e300);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("learning rate"), std::string::npos);
  }
}

TEST(NuSamples, LabelsAndNegatives) {
  const auto data = small_synthetic(63);
  const PairFeatures f(data.graph);
  Hyperparams h;
  h.communities = 3;
  h.topics = 4;
  GibbsSampler sampler(data.graph, f, h, AblationConfig{});
  LinkParams p{EtaTensor::uniform(3, 4), {}, TopicPopularity(4, data.graph.num_buckets())};
  p.popularity.refresh();
  sampler.set_params(p);
  Rng rng(64, 0);
  const auto state = LatentState::random(data.graph, 3, 4, rng);
  const auto samples = nu_samples(sampler, state, f, p, 2.0, rng);
  std::size_t pos = 0;
  for (const auto& s : samples) pos += s.label == 1.0;
  EXPECT_EQ(pos, data.graph.num_diffusions());
  EXPECT_EQ(samples.size(), 3 * data.graph.num_diffusions());
}

TEST(Trainer, ReportHasOneRecordPerIteration) {
  const auto data = small_synthetic(65);
  Trainer t(data.graph, small_config(6));
  const auto& report = t.run();
  EXPECT_EQ(report.iterations.size(), 6u);
  EXPECT_TRUE(t.done());
  EXPECT_THROW(t.step(), Error);
  const auto path = temp_dir("report") / "r.csv";
  report.write_csv(path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("iteration,log_joint,perplexity", 0), 0u);
}

TEST(Trainer, DeterministicSnapshotsWithOneWorker) {
  const auto data = small_synthetic(66);
  Trainer a(data.graph, small_config(5)), b(data.graph, small_config(5));
  a.run();
  b.run();
  EXPECT_TRUE(a.snapshot(data.vocabulary) == b.snapshot(data.vocabulary));
  EXPECT_EQ(encode_snapshot(a.snapshot(data.vocabulary)), encode_snapshot(b.snapshot(data.vocabulary)));
}

TEST(Trainer, ResumeEqualsUninterruptedRun) {
  const auto data = small_synthetic(67);
  for (std::size_t workers : {1u, 2u}) {
    auto config = small_config(8);
    config.workers = workers;
    Trainer straight(data.graph, config);
    straight.run();
    Trainer first(data.graph, config);
    for (int i = 0; i < 3; ++i) first.step();
    const auto bytes = encode_snapshot(first.snapshot(data.vocabulary));
    auto resumed = Trainer::resume(data.graph, decode_snapshot(bytes), workers);
    EXPECT_EQ(resumed->iteration(), 3u);
    resumed->run();
    if (workers == 1) {
      EXPECT_TRUE(resumed->snapshot(data.vocabulary) == straight.snapshot(data.vocabulary));
    } else {
      // Threads interleave counter updates, so only shapes are comparable.
      EXPECT_EQ(resumed->iteration(), straight.iteration());
      EXPECT_TRUE(resumed->state().counters_equal(resumed->state().recount(data.graph)));
    }
  }
}

TEST(Trainer, IndividualOffPinsNu) {
  const auto data = small_synthetic(68);
  auto config = small_config(4);
  config.ablation = AblationConfig::parse("no-individual-topic");
  Trainer t(data.graph, config);
  t.run();
  for (double x : t.link_params().nu) EXPECT_EQ(x, 0.0);
  auto full = small_config(4);
  Trainer f(data.graph, full);
  f.run();
  double norm = 0.0;
  for (double x : f.link_params().nu) norm += std::abs(x);
  EXPECT_GT(norm, 0.0);
}

TEST(Trainer, SingleCommunityAndTopicDegenerate) {
  const auto data = small_synthetic(69);
  TrainConfig c;
  c.hyper.communities = 1;
  c.hyper.topics = 1;
  c.hyper.iterations = 3;
  c.lda_sweeps = 2;
  Trainer t(data.graph, c);
  t.run();
  const auto p = t.params();
  for (double x : p.pi.data) EXPECT_DOUBLE_EQ(x, 1.0);
  for (double x : p.theta.data) EXPECT_DOUBLE_EQ(x, 1.0);
  std::vector<double> counts(data.graph.num_words(), 0.0);
  for (const auto& d : data.graph.documents()) {
    for (WordId w : d.tokens) counts[w] += 1.0;
  }
  const double N = static_cast<double>(data.graph.num_tokens()), W = static_cast<double>(data.graph.num_words());
  for (WordId w = 0; w < data.graph.num_words(); ++w) {
    EXPECT_NEAR(p.phi(0, w), (counts[w] + 0.1) / (N + W * 0.1), 1e-12);
  }
}

TEST(Trainer, NoJointFreezesCommunitiesInSecondPhase) {
  const auto data = small_synthetic(70);
  auto c = small_config(10);
  c.ablation = AblationConfig::parse("no-joint");
  Trainer t(data.graph, c);
  std::vector<std::uint32_t> topics_after_first;
  while (t.iteration() < 5) t.step();
  const auto frozen = t.state().community;
  // Phase one never samples topics.
  topics_after_first = t.state().topic;
  t.step();
  while (!t.done()) t.step();
  EXPECT_EQ(t.state().community, frozen);
  EXPECT_NE(t.state().topic, topics_after_first);
}

TEST(Trainer, PerplexityTrendsDown) {
  const auto data = small_synthetic(71);
  auto c = small_config(30);
  Trainer t(data.graph, c);
  const auto& r = t.run();
  auto median3 = [](double a, double b, double d) { return std::max(std::min(a, b), std::min(std::max(a, b), d)); };
  const auto& it = r.iterations;
  const double first = median3(it[0].perplexity, it[1].perplexity, it[2].perplexity);
  const double last = median3(it[27].perplexity, it[28].perplexity, it[29].perplexity);
  EXPECT_LT(last, first);
  for (const auto& rec : it) EXPECT_GE(rec.perplexity, 1.0);
}

TEST(Trainer, ParallelRunKeepsCountersConsistent) {
  const auto data = small_synthetic(72);
  auto c = small_config(4);
  c.workers = 3;
  Trainer t(data.graph, c);
  while (!t.done()) {
    t.step();
    ASSERT_TRUE(t.state().counters_equal(t.state().recount(data.graph)));
  }
  EXPECT_EQ(t.report().worker_seconds.size(), 3u);
}
