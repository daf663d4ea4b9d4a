#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "genpol/error.hpp"

namespace genpol {

#ifdef GENPOL_FLOAT32
using Real = float;
#else
using Real = double;
#endif

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

// Dense row-major array of rank 0, 1 or 2. Rank-2 is the working form for
// batches: rows are samples, columns are features.
class Tensor {
 public:
  Tensor() : shape_{}, data_(1, Real{0}) {}
  explicit Tensor(Shape shape, Real fill = Real{0});
  Tensor(Shape shape, std::vector<Real> data);

  static Tensor scalar(Real value) { return Tensor(Shape{}, value); }
  static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }
  static Tensor full(std::size_t rows, std::size_t cols, Real v) { return Tensor({rows, cols}, v); }
  static Tensor from_rows(std::initializer_list<std::initializer_list<Real>> rows);
  static Tensor column(std::span<const Real> values);
  static Tensor row(std::span<const Real> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-2 view; rank 0 reads as 1x1 and rank 1 as 1xN.
  std::size_t rows() const;
  std::size_t cols() const;

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }
  Real& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  Real at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  Real item() const;
  bool all_finite() const;
  void check_finite(const char* what) const;

  Tensor reshaped(Shape shape) const;
  Tensor row_slice(std::size_t begin, std::size_t end) const;
  Tensor gather_rows(std::span<const std::size_t> index) const;
  Tensor col_slice(std::size_t begin, std::size_t end) const;

  Real sum() const;
  Real mean() const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

Tensor hcat(std::span<const Tensor> parts);
Tensor vcat(std::span<const Tensor> parts);

// Seeded random stream. Every stochastic routine takes one of these
// explicitly so runs are reproducible from a single seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  double rademacher() { return (engine_() & 1U) ? 1.0 : -1.0; }
  std::uint64_t next_u64() { return engine_(); }

  // Independent child stream; advances this stream by one draw.
  Rng fork() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

  Tensor normal_tensor(std::size_t rows, std::size_t cols);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace genpol
