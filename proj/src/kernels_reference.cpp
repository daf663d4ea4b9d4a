#include "genpol/kernels.hpp"

namespace genpol::kernels::reference {

void gemm(std::span<const Real> a, std::span<const Real> b, std::span<Real> c, std::size_t m,
          std::size_t k, std::size_t n, Transpose op) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Real acc = 0;
      for (std::size_t p = 0; p < k; ++p) {
        const Real x = op == Transpose::Left ? a[p * m + i] : a[i * k + p];
        const Real y = op == Transpose::Right ? b[j * k + p] : b[p * n + j];
        acc += x * y;
      }
      c[i * n + j] = acc;
    }
  }
}

void row_sum(std::span<const Real> in, std::span<Real> out, std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    Real acc = 0;
    for (std::size_t j = 0; j < cols; ++j) acc += in[i * cols + j];
    out[i] = acc;
  }
}

void col_sum(std::span<const Real> in, std::span<Real> out, std::size_t rows, std::size_t cols) {
  for (std::size_t j = 0; j < cols; ++j) {
    Real acc = 0;
    for (std::size_t i = 0; i < rows; ++i) acc += in[i * cols + j];
    out[j] = acc;
  }
}

}  // namespace genpol::kernels::reference
