#include <benchmark/benchmark.h>

#include "comprof/gibbs.hpp"
#include "comprof/polya_gamma.hpp"
#include "comprof/synthetic.hpp"

using namespace comprof;

static void BM_SamplePg(benchmark::State& state) {
  Rng rng(1, 0);
  const double c = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_pg1(c, rng).value);
}
BENCHMARK(BM_SamplePg)->Arg(0)->Arg(10)->Arg(40);

static void BM_Sweep(benchmark::State& state) {
  SyntheticSpec spec;
  spec.users = static_cast<std::size_t>(state.range(0));
  spec.friendships = spec.users * 8;
  spec.diffusions = spec.users * 8;
  Rng rng(2, 0);
  const auto data = generate(spec, rng);
  const PairFeatures features(data.graph);
  Hyperparams hyper;
  hyper.communities = spec.communities;
  hyper.topics = spec.topics;
  GibbsSampler sampler(data.graph, features, hyper, AblationConfig{});
  auto latent = LatentState::random(data.graph, spec.communities, spec.topics, rng);
  LinkParams params{EtaTensor::uniform(spec.communities, spec.topics), {},
                    topic_popularity(latent.topic, spec.topics, data.graph)};
  sampler.set_params(params);
  SweepOptions opts;
  opts.compute_log_joint = false;
  for (auto _ : state) sampler.sweep(latent, rng, opts);
  state.counters["documents"] = static_cast<double>(data.graph.num_documents());
}
BENCHMARK(BM_Sweep)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
