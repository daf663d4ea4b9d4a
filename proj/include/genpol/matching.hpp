#pragma once

#include <string>

#include "genpol/generative_model.hpp"

namespace genpol {

enum class Objective { DSM, CFM };
enum class LambdaWeighting { Vanilla, Mlsm, Unit };  // sigma_t^2, g^2(t), 1

std::string to_string(Objective o);
std::string to_string(LambdaWeighting w);
Objective parse_objective(const std::string& s);
LambdaWeighting parse_lambda(const std::string& s);

struct MatchingConfig {
  Objective objective = Objective::CFM;
  LambdaWeighting lambda = LambdaWeighting::Vanilla;
  std::size_t time_samples = 1;  // (t, eps) draws per data row
};

// Per-row time and Gaussian endpoint for one Monte-Carlo evaluation.
struct MatchingDraw {
  Tensor t;      // [B, 1], uniform on the clipped span
  Tensor noise;  // [B, d], standard normal
};

// Draw order per row: t, then d normals. Keeps losses reproducible from rng.
MatchingDraw draw_matching_noise(const PathSchedule& s, std::size_t rows, std::size_t dim, Rng& rng);

// Weighted denoising score matching,
//   mean_{i,j} 1/2 lambda(t_i) w_i (s_theta(x_t)_ij - score_ij)^2,
// for score- or noise-parameterized networks on diffusion paths.
Var dsm_loss(Tape& tape, const NetworkModel& model, const PathSchedule& s, const Tensor& x0, const Var& cond,
             const Tensor& weights, const MatchingDraw& draw, LambdaWeighting lambda);

// Weighted conditional flow matching, mean_{i,j} 1/2 w_i (v_theta - v_target)^2.
// `data` is the sample endpoint; the Gaussian endpoint comes from `draw`. ICFM
// path noise (if any) is drawn from `rng`.
Var cfm_loss(Tape& tape, const NetworkModel& model, const PathSchedule& s, const Tensor& data, const Var& cond,
             const Tensor& weights, const MatchingDraw& draw, Rng& rng);

// Draws per-sample (t, eps) and evaluates the configured objective.
// Rows are repeated `time_samples` times before drawing.
Var matching_loss(Tape& tape, const NetworkModel& model, const PathSchedule& s, const Tensor& data, const Var& cond,
                  const Tensor& weights, const MatchingConfig& config, Rng& rng);

}  // namespace genpol
