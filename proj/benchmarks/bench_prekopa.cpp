#include <benchmark/benchmark.h>

#include <vector>

#include <bfstab/prekopa.hpp>

using namespace bfstab;

namespace {

std::vector<double> nodes(int count) {
  std::vector<double> z(count);
  for (int i = 0; i < count; ++i) z[i] = -6.0 + 12.0 * i / (count - 1);
  return z;
}

void BM_SupConvolutionClosedForm(benchmark::State& state) {
  const auto g = GFunction::quadratic(-0.25, 0.0);
  const auto z = nodes(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sup_convolution_grid(g, 0.5, z));
}
BENCHMARK(BM_SupConvolutionClosedForm)->Arg(257)->Arg(2049);

void BM_SupConvolutionGrid(benchmark::State& state) {
  const auto g = GFunction::sin_bump();
  const auto z = nodes(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sup_convolution_grid(g, 0.5, z));
}
BENCHMARK(BM_SupConvolutionGrid)->Arg(257)->Arg(2049)->Unit(benchmark::kMillisecond);

}  // namespace
