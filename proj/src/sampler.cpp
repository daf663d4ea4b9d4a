#include "genpol/sampler.hpp"

#include <cmath>

namespace genpol {
namespace {

std::vector<Var> axpy(std::span<const Var> x, double h, std::span<const std::vector<Var>> ks,
                      std::span<const double> coeffs) {
  std::vector<Var> out;
  out.reserve(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    Var acc = x[c];
    for (std::size_t j = 0; j < ks.size(); ++j) {
      if (coeffs[j] == 0.0) continue;
      acc = add(acc, scale(ks[j][c], static_cast<Real>(h * coeffs[j])));
    }
    out.push_back(acc);
  }
  return out;
}

std::vector<Var> step(const SystemField& f, std::span<const Var> x, double t, double h, SolverScheme scheme) {
  switch (scheme) {
    case SolverScheme::Euler: {
      const std::vector<Var> k1 = f(x, t);
      const std::vector<Var> ks[] = {k1};
      const double c[] = {1.0};
      return axpy(x, h, ks, c);
    }
    case SolverScheme::Midpoint: {
      const std::vector<Var> k1 = f(x, t);
      const std::vector<Var> k1s[] = {k1};
      const double half[] = {0.5};
      const std::vector<Var> k2 = f(axpy(x, h, k1s, half), t + 0.5 * h);
      const std::vector<Var> k2s[] = {k2};
      const double one[] = {1.0};
      return axpy(x, h, k2s, one);
    }
    case SolverScheme::Rk4_38: {
      const std::vector<Var> k1 = f(x, t);
      std::vector<std::vector<Var>> ks{k1};
      const double c2[] = {1.0 / 3.0};
      const std::vector<Var> k2 = f(axpy(x, h, ks, c2), t + h / 3.0);
      ks.push_back(k2);
      const double c3[] = {-1.0 / 3.0, 1.0};
      const std::vector<Var> k3 = f(axpy(x, h, ks, c3), t + 2.0 * h / 3.0);
      ks.push_back(k3);
      const double c4[] = {1.0, -1.0, 1.0};
      const std::vector<Var> k4 = f(axpy(x, h, ks, c4), t + h);
      ks.push_back(k4);
      const double c5[] = {1.0 / 8.0, 3.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0};
      return axpy(x, h, ks, c5);
    }
  }
  throw UnsupportedError("unknown solver scheme");
}

}  // namespace

std::string to_string(SolverScheme s) {
  switch (s) {
    case SolverScheme::Euler: return "euler";
    case SolverScheme::Midpoint: return "midpoint";
    case SolverScheme::Rk4_38: return "rk4_38";
  }
  return "?";
}

SolverScheme parse_solver_scheme(const std::string& s) {
  if (s == "euler") return SolverScheme::Euler;
  if (s == "midpoint") return SolverScheme::Midpoint;
  if (s == "rk4_38" || s == "rk4") return SolverScheme::Rk4_38;
  throw ConfigError("unknown solver scheme '" + s + "' (expected euler, midpoint or rk4_38)");
}

TimeSpan generation_span(const PathSchedule& s) { return {s.prior_time(), s.data_time()}; }

std::vector<Var> integrate_system(const SystemField& field, std::vector<Var> state, const SolverSpec& spec,
                                  TimeSpan span, const IntegrateOptions& options) {
  if (spec.steps < 1) throw ConfigError("solver needs at least one step");
  if (state.empty()) throw ShapeError("integrate: empty state");
  for (const Var& v : state) v.value().check_finite("integrate: initial state");
  Tape& tape = state[0].tape();
  const double h = (span.end - span.start) / spec.steps;
  const std::size_t base = tape.size();
  if (options.record) {
    options.record->t.assign(1, span.start);
    options.record->x.assign(1, state[0].value());
  }
  for (int k = 0; k < spec.steps; ++k) {
    const double t = span.start + k * h;
    try {
      state = step(field, state, t, h, spec.scheme);
    } catch (const NumericError& e) {
      throw DivergenceError("integration diverged at step " + std::to_string(k) + ": " + e.what(), k);
    }
    for (const Var& v : state) {
      if (!v.value().all_finite())
        throw DivergenceError("integration diverged at step " + std::to_string(k), k);
    }
    if (!options.differentiable) {
      std::vector<Tensor> values;
      for (const Var& v : state) values.push_back(v.value());
      tape.rewind(base);
      state.clear();
      for (auto& v : values) state.push_back(tape.constant(std::move(v)));
    }
    if (options.record) {
      // Same arithmetic as the loop's t, so the last entry equals the span end up to rounding.
      options.record->t.push_back(k + 1 == spec.steps ? span.end : span.start + (k + 1) * h);
      options.record->x.push_back(state[0].value());
    }
  }
  return state;
}

Var integrate(const VelocityField& field, const Var& x_init, const SolverSpec& spec, TimeSpan span,
              const IntegrateOptions& options) {
  const SystemField sys = [&field](std::span<const Var> s, double t) { return std::vector<Var>{field(s[0], t)}; };
  return integrate_system(sys, {x_init}, spec, span, options)[0];
}

Tensor broadcast_condition(const Tensor& cond, std::size_t n) {
  if (cond.numel() == 0 || cond.rows() == n) return cond;
  if (cond.rows() != 1) throw ShapeError("condition must have 1 or " + std::to_string(n) + " rows");
  std::vector<std::size_t> idx(n, 0);
  return cond.gather_rows(idx);
}

GenerateResult generate(const GenerativeModel& model, std::size_t n, const SolverSpec& spec, const Tensor& cond,
                        Rng& rng, bool record) {
  const std::size_t d = model.spec().action_dim;
  GenerateResult out{Tensor({n, d}), std::nullopt};
  if (n == 0) return out;
  Tensor prior = rng.normal_tensor(n, d);
  Tape tape;
  const auto bound = model.bind(tape, false);
  Var c;
  if (model.spec().cond_dim > 0) c = tape.constant(broadcast_condition(cond, n));
  Trajectory traj;
  IntegrateOptions opts{false, record ? &traj : nullptr};
  const Var x = integrate(bound.field(c), tape.constant(std::move(prior)), spec, generation_span(model.schedule()), opts);
  out.samples = x.value();
  if (record) out.trajectory = std::move(traj);
  return out;
}

Var generate_from(const GenerativeModel::Bound& model, const Var& x_prior, const SolverSpec& spec, const Var& cond,
                  Trajectory* record) {
  IntegrateOptions opts{true, record};
  return integrate(model.field(cond), x_prior, spec, generation_span(model.model->schedule()), opts);
}

}  // namespace genpol
