#include <algorithm>

#include <benchmark/benchmark.h>

#include <bfstab/transport1d.hpp>

using namespace bfstab;

namespace {

GaussianMixture1D mixture(int components) {
  std::vector<MixtureComponent1D> comps;
  for (int k = 0; k < components; ++k) comps.push_back({1.0, -1.5 + 3.0 * k / std::max(1, components - 1), 0.5 + 0.25 * k});
  return GaussianMixture1D::normalized(comps);
}

void BM_Distance(benchmark::State& state) {
  const Density1D u = mixture(static_cast<int>(state.range(0)));
  const Density1D v = StandardGaussian{};
  for (auto _ : state) benchmark::DoNotOptimize(bf_distance(u, v));
}
BENCHMARK(BM_Distance)->Arg(1)->Arg(2)->Arg(4)->Arg(8);

void BM_UpperQuantile(benchmark::State& state) {
  const auto m = mixture(static_cast<int>(state.range(0)));
  double q = 1e-3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.upper_quantile(q));
    q = q < 1e-200 ? 1e-3 : q * 0.5;
  }
}
BENCHMARK(BM_UpperQuantile)->Arg(1)->Arg(4);

void BM_TalagrandDeficit(benchmark::State& state) {
  const Density1D nu = mixture(3);
  for (auto _ : state) benchmark::DoNotOptimize(talagrand_deficit_1d(nu));
}
BENCHMARK(BM_TalagrandDeficit);

}  // namespace
