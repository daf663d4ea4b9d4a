#pragma once

#include <optional>
#include <string>
#include <vector>

#include "genpol/generative_model.hpp"

namespace genpol {

enum class SolverScheme { Euler, Midpoint, Rk4_38 };

std::string to_string(SolverScheme s);
SolverScheme parse_solver_scheme(const std::string& s);

struct SolverSpec {
  SolverScheme scheme = SolverScheme::Euler;
  int steps = 32;
};

struct TimeSpan {
  double start = 0.0;
  double end = 1.0;
};

// Generation runs from the prior time to the data time of the schedule.
TimeSpan generation_span(const PathSchedule& s);

struct Trajectory {
  std::vector<double> t;  // t_0 .. t_T, strictly monotone
  std::vector<Tensor> x;  // states at those times
};

// Right-hand side of a system of taped states (used for [x; log-density]).
using SystemField = std::function<std::vector<Var>(std::span<const Var> state, double t)>;

struct IntegrateOptions {
  // Keep the whole unrolled solve on the tape so the result can be
  // differentiated. When false every step is collapsed to a constant and the
  // tape is rewound, so memory stays flat in the number of steps.
  bool differentiable = true;
  Trajectory* record = nullptr;  // records the first state component
};

// Fixed-step explicit integration over `span` with spec.steps uniform steps.
// Throws DivergenceError (with the step index) if the state stops being finite.
std::vector<Var> integrate_system(const SystemField& field, std::vector<Var> state, const SolverSpec& spec,
                                  TimeSpan span, const IntegrateOptions& options = {});

Var integrate(const VelocityField& field, const Var& x_init, const SolverSpec& spec, TimeSpan span,
              const IntegrateOptions& options = {});

struct GenerateResult {
  Tensor samples;
  std::optional<Trajectory> trajectory;
};

// Draws n prior points N(0, I) and integrates them to data space. `cond`
// is either empty, a single row (shared by every sample) or n rows.
GenerateResult generate(const GenerativeModel& model, std::size_t n, const SolverSpec& spec, const Tensor& cond,
                        Rng& rng, bool record = false);

// Differentiable generation from given prior points.
Var generate_from(const GenerativeModel::Bound& model, const Var& x_prior, const SolverSpec& spec, const Var& cond,
                  Trajectory* record = nullptr);

// Repeats a single condition row n times; passes n-row conditions through.
Tensor broadcast_condition(const Tensor& cond, std::size_t n);

}  // namespace genpol
