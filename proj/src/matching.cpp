#include "genpol/matching.hpp"

namespace genpol {
namespace {

void check_weights(const Tensor& weights, std::size_t rows) {
  if (weights.numel() != rows)
    throw ShapeError("expected " + std::to_string(rows) + " weights, got " + std::to_string(weights.numel()));
  for (std::size_t i = 0; i < weights.numel(); ++i) {
    if (!(weights[i] >= 0)) throw DomainError("negative or NaN matching weight at row " + std::to_string(i));
  }
}

Tensor repeat_rows(const Tensor& x, std::size_t times) {
  if (times == 1) return x;
  std::vector<std::size_t> idx;
  idx.reserve(x.rows() * times);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t k = 0; k < times; ++k) idx.push_back(i);
  return x.gather_rows(idx);
}

}  // namespace

std::string to_string(Objective o) { return o == Objective::DSM ? "dsm" : "cfm"; }

std::string to_string(LambdaWeighting w) {
  switch (w) {
    case LambdaWeighting::Vanilla: return "vanilla";
    case LambdaWeighting::Mlsm: return "mlsm";
    case LambdaWeighting::Unit: return "unit";
  }
  return "?";
}

Objective parse_objective(const std::string& s) {
  if (s == "dsm") return Objective::DSM;
  if (s == "cfm") return Objective::CFM;
  throw ConfigError("unknown matching objective '" + s + "' (expected dsm or cfm)");
}

LambdaWeighting parse_lambda(const std::string& s) {
  if (s == "vanilla") return LambdaWeighting::Vanilla;
  if (s == "mlsm") return LambdaWeighting::Mlsm;
  if (s == "unit") return LambdaWeighting::Unit;
  throw ConfigError("unknown lambda weighting '" + s + "' (expected vanilla, mlsm or unit)");
}

MatchingDraw draw_matching_noise(const PathSchedule& s, std::size_t rows, std::size_t dim, Rng& rng) {
  MatchingDraw d{Tensor({rows, 1}), Tensor({rows, dim})};
  for (std::size_t i = 0; i < rows; ++i) {
    d.t[i] = static_cast<Real>(rng.uniform(s.t_min(), s.t_max()));
    for (std::size_t j = 0; j < dim; ++j) d.noise[i * dim + j] = static_cast<Real>(rng.normal());
  }
  return d;
}

Var dsm_loss(Tape& tape, const NetworkModel& model, const PathSchedule& s, const Tensor& x0, const Var& cond,
             const Tensor& weights, const MatchingDraw& draw, LambdaWeighting lambda) {
  if (!s.is_diffusion()) throw UnsupportedError("denoising score matching needs a diffusion (VPSDE/GVP) path");
  if (model.parameterization == Parameterization::Velocity)
    throw UnsupportedError("denoising score matching needs a score or noise network");
  const std::size_t rows = x0.rows();
  check_weights(weights, rows);
  Rng unused(0);
  const PathPoint pt = sample_path_point(s, x0, draw.noise, draw.t, unused);
  const Tensor target = target_score(s, pt.x_t, x0, draw.t);

  Tensor coef({rows, 1});      // 1/2 lambda(t) w
  Tensor to_score({rows, 1});  // noise -> score factor, -1/sigma
  for (std::size_t i = 0; i < rows; ++i) {
    const double t = draw.t[i];
    const double sigma = alpha_sigma(s, t).sigma;
    double lam = 1.0;
    switch (lambda) {
      case LambdaWeighting::Vanilla: lam = sigma * sigma; break;
      case LambdaWeighting::Mlsm: lam = drift_diffusion(s, t).g2; break;
      case LambdaWeighting::Unit: lam = 1.0; break;
    }
    coef[i] = static_cast<Real>(0.5 * lam * weights[i]);
    to_score[i] = static_cast<Real>(-1.0 / sigma);
  }

  Var score = model.fn(tape.constant(pt.x_t), draw.t, cond);
  if (model.parameterization == Parameterization::Noise) score = mul(score, to_score);
  return mean(mul(square(sub(score, tape.constant(target))), coef));
}

Var cfm_loss(Tape& tape, const NetworkModel& model, const PathSchedule& s, const Tensor& data, const Var& cond,
             const Tensor& weights, const MatchingDraw& draw, Rng& rng) {
  if (model.parameterization != Parameterization::Velocity)
    throw UnsupportedError("flow matching needs a velocity network, got " + to_string(model.parameterization));
  const std::size_t rows = data.rows();
  check_weights(weights, rows);
  Tensor x_t, target;
  if (s.is_diffusion()) {
    x_t = sample_path_point(s, data, draw.noise, draw.t, rng).x_t;
    target = target_velocity(s, data, draw.noise, draw.t);
  } else {
    // noise at t = 0, data at t = 1
    x_t = sample_path_point(s, draw.noise, data, draw.t, rng).x_t;
    target = target_velocity(s, draw.noise, data, draw.t);
  }
  Tensor coef({rows, 1});
  for (std::size_t i = 0; i < rows; ++i) coef[i] = static_cast<Real>(0.5 * weights[i]);
  const Var v = model.fn(tape.constant(x_t), draw.t, cond);
  return mean(mul(square(sub(v, tape.constant(target))), coef));
}

Var matching_loss(Tape& tape, const NetworkModel& model, const PathSchedule& s, const Tensor& data, const Var& cond,
                  const Tensor& weights, const MatchingConfig& config, Rng& rng) {
  const std::size_t reps = std::max<std::size_t>(1, config.time_samples);
  const Tensor x = repeat_rows(data, reps);
  const Tensor w = repeat_rows(weights.reshaped({weights.numel(), 1}), reps);
  Var c = cond;
  if (cond.valid() && reps > 1) c = tape.constant(repeat_rows(cond.value(), reps));
  const MatchingDraw draw = draw_matching_noise(s, x.rows(), x.cols(), rng);
  if (config.objective == Objective::DSM) return dsm_loss(tape, model, s, x, c, w, draw, config.lambda);
  return cfm_loss(tape, model, s, x, c, w, draw, rng);
}

}  // namespace genpol
