#include "genpol/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace genpol {

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, Real fill) : shape_(std::move(shape)) {
  if (shape_.size() > 2) throw ShapeError("tensor rank > 2 unsupported: " + shape_str(shape_));
  data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<Real> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() > 2) throw ShapeError("tensor rank > 2 unsupported: " + shape_str(shape_));
  if (shape_numel(shape_) != data_.size())
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " + shape_str(shape_));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<Real>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<Real> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged rows in Tensor::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::column(std::span<const Real> values) {
  return Tensor({values.size(), 1}, std::vector<Real>(values.begin(), values.end()));
}

Tensor Tensor::row(std::span<const Real> values) {
  return Tensor({1, values.size()}, std::vector<Real>(values.begin(), values.end()));
}

std::size_t Tensor::rows() const {
  switch (shape_.size()) {
    case 0:
    case 1: return 1;
    default: return shape_[0];
  }
}

std::size_t Tensor::cols() const {
  switch (shape_.size()) {
    case 0: return 1;
    case 1: return shape_[0];
    default: return shape_[1];
  }
}

Real Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape_));
  return data_[0];
}

bool Tensor::all_finite() const {
  for (Real v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::check_finite(const char* what) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i]))
      throw NumericError(std::string(what) + ": non-finite value at flat index " + std::to_string(i));
  }
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size())
    throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::row_slice(std::size_t begin, std::size_t end) const {
  const std::size_t c = cols();
  if (begin > end || end > rows()) throw ShapeError("row_slice out of range");
  return Tensor({end - begin, c},
                std::vector<Real>(data_.begin() + static_cast<std::ptrdiff_t>(begin * c),
                                  data_.begin() + static_cast<std::ptrdiff_t>(end * c)));
}

Tensor Tensor::gather_rows(std::span<const std::size_t> index) const {
  const std::size_t c = cols();
  Tensor out({index.size(), c});
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= rows()) throw ShapeError("gather_rows index out of range");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(index[i] * c), c,
                out.data_.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  return out;
}

Tensor Tensor::col_slice(std::size_t begin, std::size_t end) const {
  const std::size_t r = rows();
  const std::size_t c = cols();
  if (begin > end || end > c) throw ShapeError("col_slice out of range");
  Tensor out({r, end - begin});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = begin; j < end; ++j) out.at(i, j - begin) = data_[i * c + j];
  return out;
}

Real Tensor::sum() const {
  Real s = 0;
  for (Real v : data_) s += v;
  return s;
}

Real Tensor::mean() const { return data_.empty() ? Real{0} : sum() / static_cast<Real>(data_.size()); }

Tensor hcat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("hcat of nothing");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  for (const auto& p : parts) {
    if (p.rows() != r) throw ShapeError("hcat row mismatch");
    c += p.cols();
  }
  Tensor out({r, c});
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t pc = p.cols();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < pc; ++j) out.at(i, off + j) = p.at(i, j);
    off += pc;
  }
  return out;
}

Tensor vcat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("vcat of nothing");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  for (const auto& p : parts) {
    if (p.cols() != c) throw ShapeError("vcat column mismatch");
    r += p.rows();
  }
  std::vector<Real> data;
  data.reserve(r * c);
  for (const auto& p : parts) data.insert(data.end(), p.values().begin(), p.values().end());
  return Tensor({r, c}, std::move(data));
}

Tensor Rng::normal_tensor(std::size_t rows, std::size_t cols) {
  Tensor t({rows, cols});
  for (auto& v : t.values()) v = static_cast<Real>(normal());
  return t;
}

}  // namespace genpol
