#include <algorithm>

#include "genpol/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace genpol::kernels {
namespace {

int g_threads = 1;

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1U << 15;

bool go_parallel(std::size_t work) { return g_threads > 1 && work >= kParallelWork; }

}  // namespace

void set_threads(int n) {
#ifdef _OPENMP
  g_threads = std::max(1, n);
  omp_set_num_threads(g_threads);
#else
  (void)n;
  g_threads = 1;
#endif
}

int threads() { return g_threads; }

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

void gemm(std::span<const Real> a, std::span<const Real> b, std::span<Real> c, std::size_t m,
          std::size_t k, std::size_t n, Transpose op) {
  const auto sm = static_cast<std::ptrdiff_t>(m);
  [[maybe_unused]] const bool par = go_parallel(m * k * n);
  switch (op) {
    case Transpose::None:
#pragma omp parallel for if (par) schedule(static)
      for (std::ptrdiff_t si = 0; si < sm; ++si) {
        const auto i = static_cast<std::size_t>(si);
        Real* crow = c.data() + i * n;
        std::fill_n(crow, n, Real{0});
        const Real* arow = a.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
          const Real x = arow[p];
          const Real* brow = b.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) crow[j] += x * brow[j];
        }
      }
      break;
    case Transpose::Left:
#pragma omp parallel for if (par) schedule(static)
      for (std::ptrdiff_t si = 0; si < sm; ++si) {
        const auto i = static_cast<std::size_t>(si);
        Real* crow = c.data() + i * n;
        std::fill_n(crow, n, Real{0});
        for (std::size_t p = 0; p < k; ++p) {
          const Real x = a[p * m + i];
          const Real* brow = b.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) crow[j] += x * brow[j];
        }
      }
      break;
    case Transpose::Right:
#pragma omp parallel for if (par) schedule(static)
      for (std::ptrdiff_t si = 0; si < sm; ++si) {
        const auto i = static_cast<std::size_t>(si);
        const Real* arow = a.data() + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          const Real* brow = b.data() + j * k;
          Real acc = 0;
          for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
          c[i * n + j] = acc;
        }
      }
      break;
  }
}

void row_sum(std::span<const Real> in, std::span<Real> out, std::size_t rows, std::size_t cols) {
  const auto sr = static_cast<std::ptrdiff_t>(rows);
  [[maybe_unused]] const bool par = go_parallel(rows * cols);
#pragma omp parallel for if (par) schedule(static)
  for (std::ptrdiff_t si = 0; si < sr; ++si) {
    const auto i = static_cast<std::size_t>(si);
    Real acc = 0;
    for (std::size_t j = 0; j < cols; ++j) acc += in[i * cols + j];
    out[i] = acc;
  }
}

void col_sum(std::span<const Real> in, std::span<Real> out, std::size_t rows, std::size_t cols) {
  // Row-major sweep; each column accumulates rows in ascending order.
  std::fill_n(out.data(), cols, Real{0});
  for (std::size_t i = 0; i < rows; ++i) {
    const Real* row = in.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += row[j];
  }
}

}  // namespace genpol::kernels
