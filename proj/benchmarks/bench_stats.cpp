#include <benchmark/benchmark.h>

#include "openset/rng.hpp"
#include "openset/stats.hpp"

using namespace openset;

namespace {

void BM_NormalQuantile(benchmark::State& state) {
  Rng rng(4);
  std::vector<double> ps(4096);
  for (double& p : ps) p = rng.uniform_open();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(normal_quantile(ps[i++ & 4095]));
  }
}

void BM_RngNormal(benchmark::State& state) {
  Rng rng(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rng.normal());
  }
}

}  // namespace

BENCHMARK(BM_NormalQuantile);
BENCHMARK(BM_RngNormal);
