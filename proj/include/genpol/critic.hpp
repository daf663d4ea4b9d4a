#pragma once

#include "genpol/adam.hpp"
#include "genpol/mlp.hpp"

namespace genpol {

struct CriticConfig {
  double tau = 0.7;     // expectile
  double gamma = 0.99;  // discount
  std::vector<std::size_t> hidden{256, 256};
  AdamConfig adam{1e-4};
};

// Transition batch: s [B, ds], a [B, da], r [B, 1], s_next [B, ds], done [B, 1].
struct TransitionBatch {
  Tensor s, a, r, s_next, done;
};

// Implicit Q-learning critic: Q(s, a) and V(s) networks.
class Critic {
 public:
  Critic() = default;
  Critic(std::size_t state_dim, std::size_t action_dim, const CriticConfig& config, Rng& rng);
  Critic(std::size_t state_dim, std::size_t action_dim, double tau, double gamma, Mlp q, Mlp v);

  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  double tau() const { return tau_; }
  double gamma() const { return gamma_; }
  Mlp& q_net() { return q_; }
  Mlp& v_net() { return v_; }
  const Mlp& q_net() const { return q_; }
  const Mlp& v_net() const { return v_; }

  Tensor q_value(const Tensor& s, const Tensor& a) const;
  Tensor v_value(const Tensor& s) const;
  // Q(s, a) - V(s), [B, 1].
  Tensor advantage(const Tensor& s, const Tensor& a) const;

  // Q on a tape with frozen critic parameters; gradients reach `a` (and `s`).
  Var q_on_tape(const Var& s, const Var& a) const;

 private:
  std::size_t state_dim_ = 0;
  std::size_t action_dim_ = 0;
  double tau_ = 0.7;
  double gamma_ = 0.99;
  Mlp q_;
  Mlp v_;
};

// mean over the batch of |tau - 1(u <= 0)| u^2.
Var expectile_loss(const Var& u, double tau);
double expectile_loss(const Tensor& u, double tau);

struct CriticOptimizers {
  Adam q;
  Adam v;
  static CriticOptimizers for_critic(const Critic& critic, const AdamConfig& config);
};

struct IqlLosses {
  double v_loss;
  double q_loss;
};

// One V step on E[L2^tau(Q(s,a) - V(s))] with Q fixed, then one Q step on
// E[(Q(s,a) - r - gamma (1 - done) V(s'))^2] with V fixed.
IqlLosses iql_step(Critic& critic, const TransitionBatch& batch, CriticOptimizers& opt);

}  // namespace genpol
