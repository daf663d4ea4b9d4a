#pragma once

#include <cstddef>
#include <vector>

#include "genpol/autodiff.hpp"
#include "genpol/tensor.hpp"

namespace genpol {

enum class Activation { Tanh, Linear };

struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden{256, 256, 256};
  std::size_t output_dim = 1;
  Activation activation = Activation::Tanh;
};

class Mlp;

// An Mlp's parameters placed on a tape for one forward/backward pass.
struct BoundMlp {
  const Mlp* net = nullptr;
  std::vector<Var> params;  // W0, b0, W1, b1, ...

  Var forward(const Var& x) const;
};

// Fully connected network: x -> act(x W0 + b0) -> ... -> x WL + bL.
// Weights are stored [in, out] so a batch [B, in] multiplies from the left.
class Mlp {
 public:
  Mlp() = default;
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  Mlp(MlpSpec spec, Rng& rng);
  static Mlp zeros(MlpSpec spec);
  // Adopts existing parameters; shapes must match the spec.
  static Mlp from_params(MlpSpec spec, std::vector<Tensor> params);

  const MlpSpec& spec() const { return spec_; }
  std::vector<Tensor>& params() { return params_; }
  const std::vector<Tensor>& params() const { return params_; }
  std::size_t layer_count() const { return params_.size() / 2; }
  std::size_t parameter_count() const;

  BoundMlp bind(Tape& tape, bool trainable) const;

  // Tape-free evaluation.
  Tensor forward(const Tensor& x) const;

 private:
  MlpSpec spec_;
  std::vector<Tensor> params_;
};

// Gaussian random Fourier features of a scalar time: [sin(2 pi t w), cos(2 pi t w)]
// with w ~ N(0, scale^2). The frequencies are fixed at construction.
class FourierTimeEmbedding {
 public:
  FourierTimeEmbedding() = default;
  FourierTimeEmbedding(std::size_t width, double scale, Rng& rng);
  explicit FourierTimeEmbedding(Tensor frequencies) : freqs_(std::move(frequencies)) {}

  std::size_t width() const { return 2 * freqs_.cols(); }
  const Tensor& frequencies() const { return freqs_; }

  // t is a [B, 1] column; result is [B, width].
  Tensor embed(const Tensor& t) const;

 private:
  Tensor freqs_ = Tensor(Shape{1, 0});
};

}  // namespace genpol
