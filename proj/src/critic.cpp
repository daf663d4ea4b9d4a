#include "genpol/critic.hpp"

#include <cmath>

namespace genpol {
namespace {

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("expectile tau must lie in (0, 1), got " + std::to_string(tau));
}

Tensor expectile_weights(const Tensor& u, double tau) {
  Tensor w(u.shape());
  for (std::size_t i = 0; i < u.numel(); ++i) w[i] = static_cast<Real>(u[i] <= 0 ? 1.0 - tau : tau);
  return w;
}

std::vector<Tensor> gather(const GradientMap& g, const std::vector<Var>& vars) {
  std::vector<Tensor> out;
  out.reserve(vars.size());
  for (const Var& v : vars) out.push_back(grad_of(g, v));
  return out;
}

}  // namespace

Critic::Critic(std::size_t state_dim, std::size_t action_dim, const CriticConfig& config, Rng& rng)
    : state_dim_(state_dim), action_dim_(action_dim), tau_(config.tau), gamma_(config.gamma) {
  check_tau(tau_);
  q_ = Mlp(MlpSpec{state_dim + action_dim, config.hidden, 1, Activation::Tanh}, rng);
  v_ = Mlp(MlpSpec{state_dim, config.hidden, 1, Activation::Tanh}, rng);
}

Critic::Critic(std::size_t state_dim, std::size_t action_dim, double tau, double gamma, Mlp q, Mlp v)
    : state_dim_(state_dim), action_dim_(action_dim), tau_(tau), gamma_(gamma), q_(std::move(q)), v_(std::move(v)) {
  check_tau(tau_);
  if (q_.spec().input_dim != state_dim + action_dim || v_.spec().input_dim != state_dim)
    throw ShapeError("critic networks do not match the state/action dimensions");
}

Tensor Critic::q_value(const Tensor& s, const Tensor& a) const {
  const Tensor parts[] = {s, a};
  return q_.forward(hcat(parts));
}

Tensor Critic::v_value(const Tensor& s) const { return v_.forward(s); }

Tensor Critic::advantage(const Tensor& s, const Tensor& a) const {
  Tensor q = q_value(s, a);
  const Tensor v = v_value(s);
  for (std::size_t i = 0; i < q.numel(); ++i) q[i] -= v[i];
  return q;
}

Var Critic::q_on_tape(const Var& s, const Var& a) const {
  const auto bound = q_.bind(a.tape(), false);
  const Var parts[] = {s, a};
  return bound.forward(hcat(parts));
}

Var expectile_loss(const Var& u, double tau) {
  check_tau(tau);
  return mean(mul(square(u), expectile_weights(u.value(), tau)));
}

double expectile_loss(const Tensor& u, double tau) {
  check_tau(tau);
  if (u.numel() == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < u.numel(); ++i) {
    const double w = u[i] <= 0 ? 1.0 - tau : tau;
    acc += w * u[i] * u[i];
  }
  return acc / static_cast<double>(u.numel());
}

CriticOptimizers CriticOptimizers::for_critic(const Critic& critic, const AdamConfig& config) {
  return {Adam(config, critic.q_net().params()), Adam(config, critic.v_net().params())};
}

IqlLosses iql_step(Critic& critic, const TransitionBatch& b, CriticOptimizers& opt) {
  const std::size_t n = b.s.rows();
  if (b.a.rows() != n || b.r.numel() != n || b.s_next.rows() != n || b.done.numel() != n)
    throw ShapeError("transition batch columns have different row counts");
  IqlLosses out{};
  {
    Tape tape;
    const Tensor q = critic.q_value(b.s, b.a);
    const auto v = critic.v_net().bind(tape, true);
    const Var u = sub(tape.constant(q), v.forward(tape.constant(b.s)));
    const Var loss = expectile_loss(u, critic.tau());
    out.v_loss = loss.value().item();
    if (!std::isfinite(out.v_loss)) throw NumericError("IQL value loss diverged");
    const auto grads = gather(tape.backward(loss), v.params);
    opt.v.step(critic.v_net().params(), grads);
  }
  {
    Tape tape;
    const Tensor v_next = critic.v_value(b.s_next);
    Tensor target({n, 1});
    for (std::size_t i = 0; i < n; ++i)
      target[i] = static_cast<Real>(b.r[i] + critic.gamma() * (1.0 - b.done[i]) * v_next[i]);
    const auto q = critic.q_net().bind(tape, true);
    const Tensor sa_parts[] = {b.s, b.a};
    const Var pred = q.forward(tape.constant(hcat(sa_parts)));
    const Var loss = mean(square(sub(pred, tape.constant(target))));
    out.q_loss = loss.value().item();
    if (!std::isfinite(out.q_loss)) throw NumericError("IQL Q loss diverged");
    const auto grads = gather(tape.backward(loss), q.params);
    opt.q.step(critic.q_net().params(), grads);
  }
  return out;
}

}  // namespace genpol
