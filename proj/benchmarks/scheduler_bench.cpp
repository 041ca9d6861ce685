#include <benchmark/benchmark.h>

#include <vector>

#include "comprof/rng.hpp"
#include "comprof/scheduler.hpp"

using namespace comprof;

static std::vector<double> random_loads(std::size_t n) {
  Rng rng(3, 0);
  std::vector<double> w(n);
  for (auto& x : w) x = 1.0 + 100.0 * rng.uniform();
  return w;
}

static void BM_Knapsack(benchmark::State& state) {
  const auto w = random_loads(static_cast<std::size_t>(state.range(0)));
  double total = 0.0;
  for (double x : w) total += x;
  for (auto _ : state) benchmark::DoNotOptimize(knapsack(w, total / 4));
}
BENCHMARK(BM_Knapsack)->Arg(8)->Arg(64)->Arg(256);

static void BM_Allocate(benchmark::State& state) {
  const auto w = random_loads(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(allocate(w, 4));
}
BENCHMARK(BM_Allocate)->Arg(8)->Arg(64);
