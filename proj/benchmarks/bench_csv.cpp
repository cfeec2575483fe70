#include <benchmark/benchmark.h>

#include <sstream>

#include "openset/feature_csv.hpp"
#include "openset/rng.hpp"

using namespace openset;

namespace {

std::string gallery_text(std::size_t rows, std::size_t dim) {
  Rng rng(2);
  Gallery g;
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < rows; ++i) {
    for (double& x : v) x = rng.normal();
    g.add_media(Embedding::from_raw("s" + std::to_string(i / 10), "m" + std::to_string(i % 10), v));
  }
  std::ostringstream out;
  write_gallery(out, g);
  return out.str();
}

void BM_ReadGallery(benchmark::State& state) {
  const std::string text = gallery_text(static_cast<std::size_t>(state.range(0)), 128);
  for (auto _ : state) {
    std::istringstream in(text);
    benchmark::DoNotOptimize(read_gallery(in));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}

void BM_FormatDouble(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> xs(1024);
  for (double& x : xs) x = rng.normal();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(format_double(xs[i++ & 1023]));
  }
}

}  // namespace

BENCHMARK(BM_ReadGallery)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FormatDouble);
