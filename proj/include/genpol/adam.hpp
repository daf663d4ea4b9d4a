#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "genpol/tensor.hpp"

namespace genpol {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction, updating parameters in place.
class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig config, std::span<const Tensor> params);

  void step(std::span<Tensor> params, std::span<const Tensor> grads);

  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  std::int64_t step_count() const { return t_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t t_ = 0;
};

}  // namespace genpol
