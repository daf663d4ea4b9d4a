#pragma once

#include "genpol/generative_model.hpp"
#include "genpol/sampler.hpp"

namespace genpol {

enum class TraceMode { Exact, Hutchinson };
enum class ProbeKind { Gaussian, Rademacher };

struct TraceOptions {
  TraceMode mode = TraceMode::Exact;
  int probes = 1;  // Hutchinson only
  ProbeKind probe = ProbeKind::Gaussian;
};

TraceOptions parse_trace_mode(const std::string& mode, int probes);

struct TraceEstimate {
  Var trace;      // [B, 1], differentiable
  Tensor std_error;  // [B, 1]; zero for exact mode and for a single probe
};

// Tr(dv/dx) per row at (x, t). Exact mode sums d Jacobian-vector products
// against basis vectors; Hutchinson averages e^T (dv/dx) e over random probes.
TraceEstimate jacobian_trace(const VelocityField& field, const Var& x, double t, const TraceOptions& options,
                             Rng& rng);

// log N(x; 0, I) per row, [B, 1].
Var standard_normal_log_density(const Var& x);

struct LogDensity {
  Var log_density;  // [B, 1], differentiable w.r.t. x_data and field parameters
  Var terminal;     // point reached in prior space
  Tensor std_error;    // [B, 1] Hutchinson standard error; zeros for exact trace
};

// Instantaneous change of variables: integrates [x; l] with dl/dt = Tr(dv/dx)
// from the data time to the prior time on the solver grid, giving
//   log p(x_data) = log N(x(prior time)) + l.
// Each Hutchinson probe is held fixed along the whole solve. With
// differentiable = false the solve is not kept on the tape.
LogDensity log_prob(const VelocityField& field, const Var& x_data, const PathSchedule& schedule,
                    const SolverSpec& spec, const TraceOptions& options, Rng& rng, bool differentiable = true);

struct SampleWithLogDensity {
  Var sample;       // data-space point
  Var log_density;  // log density of `sample` under the generating flow
  Tensor std_error;
};

// Generation and its log-density along the same trajectory: integrates
// [x; l] from the prior point to the data time, log p = log N(z) - l.
SampleWithLogDensity sample_with_log_prob(const VelocityField& field, const Var& x_prior,
                                          const PathSchedule& schedule, const SolverSpec& spec,
                                          const TraceOptions& options, Rng& rng);

struct LogDensityResult {
  Tensor terminal;
  Tensor log_density;  // [B, 1], nats
  TraceOptions mode;
  Tensor std_error;
};

// Tape-free convenience wrapper for a trained model.
LogDensityResult log_prob(const GenerativeModel& model, const Tensor& x, const Tensor& cond, const SolverSpec& spec,
                          const TraceOptions& options, Rng& rng);

}  // namespace genpol
