#pragma once

#include <cstddef>
#include <span>

#include "genpol/tensor.hpp"

// Dense inner loops used by the autodiff engine. The default entry points
// split rows across OpenMP threads when the build has OpenMP; each output
// element is still reduced by a single thread in ascending index order, so
// results do not depend on the thread count. The `reference` namespace keeps
// plain serial loops for testing and benchmarking.
namespace genpol::kernels {

enum class Transpose { None, Left, Right };

// C[m,n] = op(A) * op(B), with k the contracted extent.
//   None:  A is m x k, B is k x n
//   Left:  A is k x m, B is k x n   (A^T B)
//   Right: A is m x k, B is n x k   (A B^T)
void gemm(std::span<const Real> a, std::span<const Real> b, std::span<Real> c, std::size_t m,
          std::size_t k, std::size_t n, Transpose op);

// out[i] = sum_j in[i, j]
void row_sum(std::span<const Real> in, std::span<Real> out, std::size_t rows, std::size_t cols);

// out[j] = sum_i in[i, j]
void col_sum(std::span<const Real> in, std::span<Real> out, std::size_t rows, std::size_t cols);

void set_threads(int n);
int threads();
bool openmp_enabled();

namespace reference {
void gemm(std::span<const Real> a, std::span<const Real> b, std::span<Real> c, std::size_t m,
          std::size_t k, std::size_t n, Transpose op);
void row_sum(std::span<const Real> in, std::span<Real> out, std::size_t rows, std::size_t cols);
void col_sum(std::span<const Real> in, std::span<Real> out, std::size_t rows, std::size_t cols);
}  // namespace reference

}  // namespace genpol::kernels
