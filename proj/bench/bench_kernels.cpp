#include <benchmark/benchmark.h>

#include <vector>

#include "genpol/kernels.hpp"
#include "genpol/tensor.hpp"

using namespace genpol;

namespace {

std::vector<Real> filled(std::size_t n, Real seed) {
  std::vector<Real> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<Real>(((i * 7919 + 13) % 1000) / 1000.0) - seed;
  return v;
}

template <bool Omp>
void BM_gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = filled(n * n, 0.5), b = filled(n * n, 0.25);
  std::vector<Real> c(n * n);
  for (auto _ : state) {
    if constexpr (Omp)
      kernels::gemm(a, b, c, n, n, n, kernels::Transpose::None);
    else
      kernels::reference::gemm(a, b, c, n, n, n, kernels::Transpose::None);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <bool Omp>
void BM_row_sum(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0)), cols = std::size_t{256};
  const auto in = filled(rows * cols, 0.5);
  std::vector<Real> out(rows);
  for (auto _ : state) {
    if constexpr (Omp)
      kernels::row_sum(in, out, rows, cols);
    else
      kernels::reference::row_sum(in, out, rows, cols);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows * cols));
}

}  // namespace

BENCHMARK(BM_gemm<false>)->Name("gemm/reference")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_gemm<true>)->Name("gemm/openmp")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_row_sum<false>)->Name("row_sum/reference")->Range(256, 16384);
BENCHMARK(BM_row_sum<true>)->Name("row_sum/openmp")->Range(256, 16384);
BENCHMARK_MAIN();
