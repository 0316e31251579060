#include <benchmark/benchmark.h>

#include <bfstab/corpus.hpp>
#include <bfstab/deficits.hpp>
#include <bfstab/sphereopt.hpp>

using namespace bfstab;

namespace {

void BM_DnDistance(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto u = random_mixture(n, 7);
  const auto v = GaussianMixtureND::standard(n);
  for (auto _ : state) benchmark::DoNotOptimize(dn_distance(u, v).value);
}
BENCHMARK(BM_DnDistance)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_LsiDeficit(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto f = relative_density(random_mixture(n, 7));
  for (auto _ : state) benchmark::DoNotOptimize(lsi_deficit(f).value);
}
BENCHMARK(BM_LsiDeficit)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace
