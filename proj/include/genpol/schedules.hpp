#pragma once

#include <string>

#include "genpol/autodiff.hpp"
#include "genpol/tensor.hpp"

namespace genpol {

enum class PathKind { VPSDE, GVP, ICFM };
enum class Parameterization { Velocity, Noise, Score };

std::string to_string(PathKind kind);
std::string to_string(Parameterization p);
PathKind parse_path_kind(const std::string& s);
Parameterization parse_parameterization(const std::string& s);

// Diffusion kinds (VPSDE, GVP) hold data at t = 0 and noise at t = 1:
//   x_t = alpha_t x0 + sigma_t eps.
// ICFM holds noise at t = 0 and data at t = 1 on straight paths:
//   x_t = t x1 + (1 - t) x0 + sigma z.
struct PathSchedule {
  PathKind kind = PathKind::GVP;
  double beta_min = 0.1;   // VPSDE, beta_t linear in t
  double beta_max = 20.0;
  double icfm_sigma = 0.0;
  double t_eps = 1e-3;     // schedule functions are evaluated on [t_eps, 1 - t_eps]

  static PathSchedule vpsde(double beta_min = 0.1, double beta_max = 20.0) {
    return {PathKind::VPSDE, beta_min, beta_max, 0.0};
  }
  static PathSchedule gvp() { return {PathKind::GVP}; }
  static PathSchedule icfm(double sigma = 0.0) { return {PathKind::ICFM, 0.1, 20.0, sigma}; }

  bool is_diffusion() const { return kind != PathKind::ICFM; }
  double clip(double t) const;
  double t_min() const { return t_eps; }
  double t_max() const { return 1.0 - t_eps; }
  // Ends of the clipped span where data and the Gaussian prior live.
  double data_time() const { return is_diffusion() ? t_min() : t_max(); }
  double prior_time() const { return is_diffusion() ? t_max() : t_min(); }
  double beta(double t) const { return beta_min + t * (beta_max - beta_min); }
};

struct ScaleNoise {
  double alpha;
  double sigma;
};

struct DriftDiffusion {
  double f;   // d log alpha / dt
  double g2;  // d sigma^2 / dt - 2 f sigma^2
};

// Closed-form scale and noise levels, t in [0, 1]. Diffusion kinds only.
ScaleNoise alpha_sigma(const PathSchedule& s, double t);
// Closed-form time derivatives (alpha', sigma').
ScaleNoise alpha_sigma_dt(const PathSchedule& s, double t);
// Drift and squared diffusion at the clipped time.
DriftDiffusion drift_diffusion(const PathSchedule& s, double t);

struct PathPoint {
  Tensor x_t;
  Tensor noise;  // eps for diffusion kinds, z for ICFM (zeros when sigma = 0)
};

// `t` is a [B, 1] column (one time per row) or a scalar tensor.
// Diffusion kinds take eps as `x1_or_noise` and draw nothing; ICFM takes the
// data endpoint and draws z only when its path noise is positive.
PathPoint sample_path_point(const PathSchedule& s, const Tensor& x0, const Tensor& x1_or_noise, const Tensor& t,
                            Rng& rng);

// grad_{x_t} log p(x_t | x0) = -(x_t - alpha x0) / sigma^2.
Tensor target_score(const PathSchedule& s, const Tensor& x_t, const Tensor& x0, const Tensor& t);

// Conditional velocity: alpha' x0 + sigma' eps (diffusion), x1 - x0 (ICFM).
Tensor target_velocity(const PathSchedule& s, const Tensor& x0, const Tensor& x1_or_noise, const Tensor& t);

// Converts a network output between parameterizations at (x_t, t):
//   velocity = f x - g^2/2 score,  score = -noise / sigma.
Tensor convert(Parameterization from, Parameterization to, const PathSchedule& s, const Tensor& x_t,
               const Tensor& t, const Tensor& value);

// Taped conversion to a velocity; used to turn any network into an ODE field.
Var to_velocity(Parameterization from, const PathSchedule& s, const Var& x_t, const Tensor& t, const Var& value);

// Smallest sigma accepted where a division by sigma is required.
inline constexpr double kSigmaFloor = 1e-6;

}  // namespace genpol
