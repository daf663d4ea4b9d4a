#include "genpol/adam.hpp"

#include <cmath>

namespace genpol {

Adam::Adam(AdamConfig config, std::span<const Tensor> params) : config_(config) {
  for (const auto& p : params) {
    m_.emplace_back(p.shape());
    v_.emplace_back(p.shape());
  }
}

void Adam::step(std::span<Tensor> params, std::span<const Tensor> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ShapeError("adam: expected " + std::to_string(m_.size()) + " parameter tensors");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].shape() != m_[k].shape() || grads[k].shape() != m_[k].shape())
      throw ShapeError("adam: shape mismatch at parameter " + std::to_string(k));
    grads[k].check_finite("adam gradient");
  }
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k];
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    const Tensor& g = grads[k];
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const double gi = g[i];
      m[i] = static_cast<Real>(b1 * m[i] + (1.0 - b1) * gi);
      v[i] = static_cast<Real>(b2 * v[i] + (1.0 - b2) * gi * gi);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] = static_cast<Real>(p[i] - config_.lr * mhat / (std::sqrt(vhat) + config_.eps));
    }
  }
}

}  // namespace genpol
