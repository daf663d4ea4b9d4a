#include "genpol/mlp.hpp"

#include <cmath>
#include <numbers>

namespace genpol {
namespace {

std::vector<std::size_t> layer_sizes(const MlpSpec& spec) {
  std::vector<std::size_t> sizes{spec.input_dim};
  sizes.insert(sizes.end(), spec.hidden.begin(), spec.hidden.end());
  sizes.push_back(spec.output_dim);
  return sizes;
}

}  // namespace

Mlp::Mlp(MlpSpec spec, Rng& rng) : spec_(std::move(spec)) {
  const auto sizes = layer_sizes(spec_);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    Tensor w({sizes[l], sizes[l + 1]});
    Tensor b({1, sizes[l + 1]});
    for (auto& v : w.values()) v = static_cast<Real>(rng.uniform(-bound, bound));
    for (auto& v : b.values()) v = static_cast<Real>(rng.uniform(-bound, bound));
    params_.push_back(std::move(w));
    params_.push_back(std::move(b));
  }
}

Mlp Mlp::zeros(MlpSpec spec) {
  Mlp m;
  m.spec_ = std::move(spec);
  const auto sizes = layer_sizes(m.spec_);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    m.params_.emplace_back(Shape{sizes[l], sizes[l + 1]});
    m.params_.emplace_back(Shape{1, sizes[l + 1]});
  }
  return m;
}

Mlp Mlp::from_params(MlpSpec spec, std::vector<Tensor> params) {
  Mlp m = zeros(std::move(spec));
  if (params.size() != m.params_.size())
    throw ShapeError("expected " + std::to_string(m.params_.size()) + " parameter tensors, got " +
                     std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != m.params_[i].shape())
      throw ShapeError("parameter " + std::to_string(i) + " has shape " + shape_str(params[i].shape()) + ", expected " +
                       shape_str(m.params_[i].shape()));
  }
  m.params_ = std::move(params);
  return m;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.numel();
  return n;
}

BoundMlp Mlp::bind(Tape& tape, bool trainable) const {
  BoundMlp b{this, {}};
  b.params.reserve(params_.size());
  for (const auto& p : params_) b.params.push_back(trainable ? tape.variable(p) : tape.constant(p));
  return b;
}

Var BoundMlp::forward(const Var& x) const {
  if (x.cols() != net->spec().input_dim)
    throw ShapeError("mlp input has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(net->spec().input_dim));
  Var h = x;
  const std::size_t layers = params.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    h = add(matmul(h, params[2 * l]), params[2 * l + 1]);
    if (l + 1 < layers && net->spec().activation == Activation::Tanh) h = tanh(h);
  }
  return h;
}

Tensor Mlp::forward(const Tensor& x) const {
  Tape tape;
  return bind(tape, false).forward(tape.constant(x)).value();
}

FourierTimeEmbedding::FourierTimeEmbedding(std::size_t width, double scale, Rng& rng) {
  if (width % 2 != 0) throw ShapeError("time embedding width must be even");
  freqs_ = Tensor({1, width / 2});
  for (auto& v : freqs_.values()) v = static_cast<Real>(scale * rng.normal());
}

Tensor FourierTimeEmbedding::embed(const Tensor& t) const {
  const std::size_t half = freqs_.cols();
  Tensor out({t.rows(), 2 * half});
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < half; ++j) {
      const double arg = two_pi * static_cast<double>(t[i]) * static_cast<double>(freqs_[j]);
      out.at(i, j) = static_cast<Real>(std::sin(arg));
      out.at(i, half + j) = static_cast<Real>(std::cos(arg));
    }
  }
  return out;
}

}  // namespace genpol
