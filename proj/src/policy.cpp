#include "genpol/policy.hpp"

#include <algorithm>
#include <cmath>

namespace genpol {
namespace {

struct WeightedBatch {
  Tensor s, a, w;
  double mean_advantage = std::numeric_limits<double>::quiet_NaN();
};

void check_matching(const ModelSpec& spec, const MatchingConfig& m) {
  if (m.objective == Objective::DSM) {
    if (!spec.schedule.is_diffusion()) throw ConfigError("dsm objective needs a vpsde or gvp schedule, not icfm");
    if (spec.parameterization == Parameterization::Velocity)
      throw ConfigError("dsm objective needs a noise or score parameterization");
  } else if (spec.parameterization != Parameterization::Velocity) {
    throw ConfigError("cfm objective needs a velocity parameterization, got " + to_string(spec.parameterization));
  }
}

void check_data(const OfflineDataset& data, const ModelSpec& spec) {
  if (data.size() == 0) throw DomainError("training dataset is empty");
  if (data.action_dim() != spec.action_dim || data.state_dim() != spec.cond_dim)
    throw ShapeError("dataset dims (s " + std::to_string(data.state_dim()) + ", a " + std::to_string(data.action_dim()) +
                     ") do not match the model (cond " + std::to_string(spec.cond_dim) + ", action " +
                     std::to_string(spec.action_dim) + ")");
}

Var condition(Tape& tape, const GenerativeModel& model, const Tensor& s) {
  return model.spec().cond_dim > 0 ? tape.constant(s) : Var{};
}

std::vector<Tensor> gather(const GradientMap& g, const std::vector<Var>& vars) {
  std::vector<Tensor> out;
  out.reserve(vars.size());
  for (const Var& v : vars) out.push_back(grad_of(g, v));
  return out;
}

double mean_value(const Tensor& t) { return t.numel() ? static_cast<double>(t.mean()) : 0.0; }

void finish_step(StepMetrics& m, const GenerativeModel& model, const TrainHooks& hooks, std::size_t steps) {
  if (hooks.eval && hooks.eval_every > 0 && (m.step % hooks.eval_every == 0 || m.step == steps))
    m.eval_value = hooks.eval(model);
  if (hooks.on_step) hooks.on_step(m);
}

std::vector<StepMetrics> fit(GenerativeModel& model, const TrainConfig& config, Rng& rng, const TrainHooks& hooks,
                             const std::function<WeightedBatch(Rng&)>& next_batch) {
  check_matching(model.spec(), config.matching);
  Adam opt(config.adam, model.net().params());
  std::vector<StepMetrics> history;
  history.reserve(config.steps);
  for (std::size_t step = 1; step <= config.steps; ++step) {
    const WeightedBatch b = next_batch(rng);
    Tape tape;
    const auto bound = model.bind(tape, true);
    const Var loss = matching_loss(tape, bound.network(), model.schedule(), b.a, condition(tape, model, b.s), b.w,
                                   config.matching, rng);
    const double value = loss.value().item();
    if (!std::isfinite(value)) throw NumericError("matching loss diverged at step " + std::to_string(step));
    opt.step(model.net().params(), gather(tape.backward(loss), bound.params()));
    StepMetrics m{step, value, mean_value(b.w), b.mean_advantage};
    finish_step(m, model, hooks, config.steps);
    history.push_back(m);
  }
  return history;
}

Tensor repeat_each(const Tensor& x, std::size_t k) {
  std::vector<std::size_t> idx;
  idx.reserve(x.rows() * k);
  for (std::size_t i = 0; i < x.rows(); ++i) idx.insert(idx.end(), k, i);
  return x.gather_rows(idx);
}

void check_beta(double beta) {
  if (!(beta > 0.0)) throw DomainError("temperature beta must be positive, got " + std::to_string(beta));
}

void check_velocity(const GenerativeModel& m, const char* who) {
  if (m.spec().parameterization != Parameterization::Velocity)
    throw UnsupportedError(std::string(who) + " must be velocity-parameterized for GMPG, got " +
                           to_string(m.spec().parameterization));
}

}  // namespace

std::vector<StepMetrics> pretrain_behavior(const OfflineDataset& data, GenerativeModel& model,
                                           const TrainConfig& config, Rng& rng, const TrainHooks& hooks) {
  check_data(data, model.spec());
  return fit(model, config, rng, hooks, [&](Rng& r) {
    const auto idx = sample_rows(data.size(), config.batch_size, r);
    return WeightedBatch{data.s.gather_rows(idx), data.a.gather_rows(idx), Tensor({idx.size(), 1}, 1.0)};
  });
}

std::string to_string(WeightMode m) { return m == WeightMode::Exponential ? "exponential" : "softmax"; }

WeightMode parse_weight_mode(const std::string& s) {
  if (s == "exponential") return WeightMode::Exponential;
  if (s == "softmax") return WeightMode::Softmax;
  throw ConfigError("unknown weight mode '" + s + "' (expected exponential or softmax)");
}

Tensor exponential_weights(const Tensor& advantage, double beta, double w_max) {
  check_beta(beta);
  if (!(w_max > 0.0)) throw DomainError("w_max must be positive");
  Tensor w({advantage.numel(), 1});
  for (std::size_t i = 0; i < advantage.numel(); ++i)
    w[i] = static_cast<Real>(std::min(std::exp(beta * advantage[i]), w_max));
  return w;
}

Tensor softmax_weights(const Tensor& q, std::size_t k, double beta) {
  check_beta(beta);
  if (k < 2) throw DomainError("softmax weighting needs at least two candidates per state");
  if (q.numel() % k != 0) throw ShapeError("candidate count is not a multiple of K");
  Tensor w({q.numel(), 1});
  for (std::size_t g = 0; g < q.numel(); g += k) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) mx = std::max(mx, beta * q[g + i]);
    double z = 0.0;
    for (std::size_t i = 0; i < k; ++i) z += std::exp(beta * q[g + i] - mx);
    for (std::size_t i = 0; i < k; ++i) w[g + i] = static_cast<Real>(std::exp(beta * q[g + i] - mx) / z);
  }
  return w;
}

Tensor gmpo_weight(const Critic& critic, const Tensor& s, const Tensor& a, double beta, double w_max) {
  return exponential_weights(critic.advantage(s, a), beta, w_max);
}

std::vector<StepMetrics> train_gmpo(const OfflineDataset& data, const Critic& critic, GenerativeModel& policy,
                                    const GmpoConfig& config, Rng& rng, const GenerativeModel* behavior,
                                    const TrainHooks& hooks) {
  check_data(data, policy.spec());
  check_matching(policy.spec(), config.train.matching);
  if (config.beta < 0.0) throw DomainError("temperature beta must be non-negative");
  const std::size_t batch = config.train.batch_size;
  if (config.mode == WeightMode::Exponential) {
    return fit(policy, config.train, rng, hooks, [&](Rng& r) {
      const auto idx = sample_rows(data.size(), batch, r);
      WeightedBatch b{data.s.gather_rows(idx), data.a.gather_rows(idx), Tensor({idx.size(), 1}, 1.0)};
      const Tensor adv = critic.advantage(b.s, b.a);
      b.mean_advantage = mean_value(adv);
      // beta = 0 is the unweighted matching loss
      if (config.beta > 0.0) b.w = exponential_weights(adv, config.beta, config.w_max);
      return b;
    });
  }
  if (!behavior) throw ConfigError("softmax weighting draws candidates from a behavior model; none given");
  if (config.k < 2) throw ConfigError("softmax weighting needs k >= 2");
  check_beta(config.beta);
  const std::size_t states = std::max<std::size_t>(1, batch / config.k);
  return fit(policy, config.train, rng, hooks, [&](Rng& r) {
    const auto idx = sample_rows(data.size(), states, r);
    const Tensor s = repeat_each(data.s.gather_rows(idx), config.k);
    WeightedBatch b{s, generate(*behavior, s.rows(), config.behavior_solver, s, r).samples, Tensor()};
    const Tensor q = critic.q_value(b.s, b.a);
    b.w = softmax_weights(q, config.k, config.beta);
    for (auto& v : b.w.values()) v *= static_cast<Real>(config.k);
    b.mean_advantage = mean_value(critic.advantage(b.s, b.a));
    return b;
  });
}

std::string to_string(GmpgVariant v) { return v == GmpgVariant::Dynamic ? "dynamic" : "static"; }

GmpgVariant parse_gmpg_variant(const std::string& s) {
  if (s == "dynamic") return GmpgVariant::Dynamic;
  if (s == "static") return GmpgVariant::Static;
  throw ConfigError("unknown gmpg variant '" + s + "' (expected dynamic or static)");
}

GmpgTerms gmpg_loss(const GenerativeModel::Bound& policy, const GenerativeModel& behavior, const Critic& critic,
                    const Tensor& states, const GmpgConfig& config, Rng& rng) {
  check_velocity(*policy.model, "policy");
  check_velocity(behavior, "behavior model");
  if (policy.params().empty()) throw ShapeError("policy has no parameters on the tape");
  Tape& tape = policy.params().front().tape();
  const std::size_t n = states.rows();
  const Var cond = condition(tape, *policy.model, states);
  const Var z = tape.constant(rng.normal_tensor(n, policy.model->spec().action_dim));
  const auto pi = sample_with_log_prob(policy.field(cond), z, policy.model->schedule(), config.solver, config.trace, rng);
  const auto mu_bound = behavior.bind(tape, false);
  const auto mu = log_prob(mu_bound.field(cond), pi.sample, behavior.schedule(), config.solver, config.trace, rng);
  const Var q = critic.q_on_tape(tape.constant(states), pi.sample);
  const Var per_row = sub(sub(pi.log_density, mu.log_density), scale(q, static_cast<Real>(config.beta)));
  return {mean(per_row), pi.sample.value(), q.value(), pi.log_density.value(), mu.log_density.value(),
          Tensor({n, 1}, 1.0)};
}

GmpgTerms gmpg_static_loss(const GenerativeModel::Bound& policy, const GenerativeModel& behavior,
                           const Critic& critic, const Tensor& states_in, const GmpgConfig& config, Rng& rng) {
  check_velocity(*policy.model, "policy");
  check_velocity(behavior, "behavior model");
  if (policy.params().empty()) throw ShapeError("policy has no parameters on the tape");
  Tape& tape = policy.params().front().tape();
  const bool softmax = config.weight_mode == WeightMode::Softmax;
  const Tensor states = softmax ? repeat_each(states_in, config.k) : states_in;
  const std::size_t n = states.rows();
  const Tensor a = generate(behavior, n, config.solver, states, rng).samples;
  const Tensor q = critic.q_value(states, a);
  Tensor w;
  if (softmax) {
    w = softmax_weights(q, config.k, config.beta);
    for (auto& v : w.values()) v *= static_cast<Real>(config.k);
  } else {
    w = gmpo_weight(critic, states, a, config.beta, config.w_max);
  }
  const Var cond = condition(tape, *policy.model, states);
  const auto lp = log_prob(policy.field(cond), tape.constant(a), policy.model->schedule(), config.solver,
                           config.trace, rng);
  const Tensor lm = log_prob(behavior, a, states, config.solver, config.trace, rng).log_density;
  Tensor coef({n, 1});
  for (std::size_t i = 0; i < n; ++i)
    coef[i] = static_cast<Real>(w[i] * (-config.beta * q[i] + lp.log_density.value()[i] - lm[i]));
  return {mean(mul(lp.log_density, coef)), a, q, lp.log_density.value(), lm, w};
}

std::vector<Tensor> gmpg_static_grad(const GenerativeModel& policy, const GenerativeModel& behavior,
                                     const Critic& critic, const Tensor& states, const GmpgConfig& config, Rng& rng) {
  Tape tape;
  const auto bound = policy.bind(tape, true);
  const GmpgTerms terms = gmpg_static_loss(bound, behavior, critic, states, config, rng);
  return gather(tape.backward(terms.loss), bound.params());
}

std::vector<StepMetrics> train_gmpg(const OfflineDataset& data, const Critic& critic, const GenerativeModel& behavior,
                                    GenerativeModel& policy, const GmpgConfig& config, Rng& rng,
                                    const TrainHooks& hooks) {
  check_data(data, behavior.spec());
  check_beta(config.beta);
  check_velocity(behavior, "behavior model");
  if (config.solver.steps < 1) throw ConfigError("gmpg needs at least one solver step");
  policy = behavior;
  Adam opt(config.train.adam, policy.net().params());
  std::vector<StepMetrics> history;
  history.reserve(config.train.steps);
  for (std::size_t step = 1; step <= config.train.steps; ++step) {
    const auto idx = sample_rows(data.size(), config.train.batch_size, rng);
    const Tensor s = data.s.gather_rows(idx);
    Tape tape;
    const auto bound = policy.bind(tape, true);
    const GmpgTerms t = config.variant == GmpgVariant::Dynamic ? gmpg_loss(bound, behavior, critic, s, config, rng)
                                                               : gmpg_static_loss(bound, behavior, critic, s, config, rng);
    const double value = t.loss.value().item();
    if (!std::isfinite(value)) throw NumericError("gmpg loss diverged at step " + std::to_string(step));
    opt.step(policy.net().params(), gather(tape.backward(t.loss), bound.params()));
    const Tensor states = t.actions.rows() == s.rows() ? s : repeat_each(s, config.k);
    const Tensor v = critic.v_value(states);
    double adv = 0.0;
    for (std::size_t i = 0; i < v.numel(); ++i) adv += t.q[i] - v[i];
    StepMetrics m{step, value, mean_value(t.weights), v.numel() ? adv / static_cast<double>(v.numel()) : 0.0};
    finish_step(m, policy, hooks, config.train.steps);
    history.push_back(m);
  }
  return history;
}

Tensor act(const GenerativeModel& policy, const Tensor& states, const SolverSpec& spec, Rng& rng) {
  return generate(policy, states.rows(), spec, states, rng).samples;
}

}  // namespace genpol
