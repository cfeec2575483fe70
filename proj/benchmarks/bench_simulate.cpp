#include <benchmark/benchmark.h>

#include "openset/rng.hpp"
#include "openset/simulate.hpp"

using namespace openset;

namespace {

void BM_ScoreTrial(benchmark::State& state) {
  ScoreSimConfig c;
  c.sampling = state.range(0) == 0 ? RowSampling::RowMaxima : RowSampling::Full;
  std::uint64_t t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_score_trial(c, derive_seed(1, 0, t++)));
  }
}

void BM_FeatureTrial(benchmark::State& state) {
  FeatureSimConfig c;
  c.k = static_cast<int>(state.range(0));
  c.trials = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_features(c));
    ++c.seed;
  }
}

}  // namespace

BENCHMARK(BM_ScoreTrial)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FeatureTrial)->Arg(1)->Arg(20)->Unit(benchmark::kMicrosecond);
