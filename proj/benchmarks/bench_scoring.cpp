#include <benchmark/benchmark.h>

#include "openset/clustering.hpp"
#include "openset/fusion.hpp"
#include "openset/rng.hpp"

using namespace openset;

namespace {

struct Workload {
  Gallery gallery;
  ProbeSet probes;
};

Workload make_workload(std::size_t subjects, std::size_t media, std::size_t probes, std::size_t dim) {
  Rng rng(1);
  Workload w;
  std::vector<double> v(dim);
  for (std::size_t s = 0; s < subjects; ++s) {
    for (std::size_t j = 0; j < media; ++j) {
      for (double& x : v) x = rng.normal();
      w.gallery.add_media(Embedding::from_raw("s" + std::to_string(s), "m" + std::to_string(j), v));
    }
  }
  for (std::size_t i = 0; i < probes; ++i) {
    for (double& x : v) x = rng.normal();
    w.probes.add(Probe{"p" + std::to_string(i), Embedding::from_raw("x", "p", v), std::nullopt});
  }
  return w;
}

void BM_ScoreMatrix(benchmark::State& state, FusionMode mode) {
  const auto subjects = static_cast<std::size_t>(state.range(0));
  const Workload w = make_workload(subjects, 10, 200, 128);
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_matrix(w.probes, w.gallery, mode));
  }
  state.SetItemsProcessed(state.iterations() * 200 * static_cast<std::int64_t>(subjects) * 10);
}

void BM_ClusterGallery(benchmark::State& state) {
  const Workload w = make_workload(50, 20, 0, 128);
  const auto c = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(cluster_gallery(w.gallery, ClusterConfig::with(c)));
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_ScoreMatrix, none, FusionMode::none())->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ScoreMatrix, local_k5, FusionMode::local_score(5))->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClusterGallery)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);
