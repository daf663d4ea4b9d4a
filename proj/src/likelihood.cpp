#include "genpol/likelihood.hpp"

#include <cmath>
#include <numbers>

namespace genpol {
namespace {

std::vector<Tensor> draw_probes(std::size_t rows, std::size_t dim, const TraceOptions& options, Rng& rng) {
  if (options.mode == TraceMode::Exact) {
    std::vector<Tensor> basis;
    for (std::size_t j = 0; j < dim; ++j) {
      Tensor e({rows, dim});
      for (std::size_t i = 0; i < rows; ++i) e[i * dim + j] = 1;
      basis.push_back(std::move(e));
    }
    return basis;
  }
  if (options.probes < 1) throw ConfigError("hutchinson trace needs at least one probe");
  std::vector<Tensor> probes;
  for (int p = 0; p < options.probes; ++p) {
    Tensor e({rows, dim});
    for (auto& v : e.values())
      v = static_cast<Real>(options.probe == ProbeKind::Gaussian ? rng.normal() : rng.rademacher());
    probes.push_back(std::move(e));
  }
  return probes;
}

// e^T J e per row for each probe.
std::vector<Var> probe_quadratic_forms(const Var& x, const Var& v, const std::vector<Tensor>& probes) {
  Tape& tape = x.tape();
  std::vector<Var> out;
  out.reserve(probes.size());
  for (const Tensor& e : probes) {
    const Var ev = tape.constant(e);
    out.push_back(row_sum(mul(tape.jvp(v, x, ev), ev)));
  }
  return out;
}

Tensor spread(const std::vector<Var>& per_probe) {
  const std::size_t n = per_probe.size();
  const std::size_t rows = per_probe.front().rows();
  Tensor se({rows, 1});
  if (n < 2) return se;
  for (std::size_t i = 0; i < rows; ++i) {
    double m = 0.0;
    for (const Var& v : per_probe) m += v.value()[i];
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (const Var& v : per_probe) ss += (v.value()[i] - m) * (v.value()[i] - m);
    se[i] = static_cast<Real>(std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)));
  }
  return se;
}

Var mean_of(const std::vector<Var>& vs) {
  Var acc = vs.front();
  for (std::size_t k = 1; k < vs.size(); ++k) acc = add(acc, vs[k]);
  return vs.size() == 1 ? acc : scale(acc, static_cast<Real>(1.0 / static_cast<double>(vs.size())));
}

// Integrates [x; l_1..l_P] with dl_p/dt = e_p^T J e_p.
std::vector<Var> augmented_solve(const VelocityField& field, const Var& x0, TimeSpan span, const SolverSpec& spec,
                                 const std::vector<Tensor>& probes, bool sum_probes,
                                 const IntegrateOptions& options = {}) {
  Tape& tape = x0.tape();
  const std::size_t rows = x0.rows();
  const SystemField sys = [&](std::span<const Var> s, double t) {
    const Var v = field(s[0], t);
    std::vector<Var> out{v};
    std::vector<Var> forms = probe_quadratic_forms(s[0], v, probes);
    if (sum_probes) {
      Var acc = forms.front();
      for (std::size_t k = 1; k < forms.size(); ++k) acc = add(acc, forms[k]);
      out.push_back(acc);
    } else {
      out.insert(out.end(), forms.begin(), forms.end());
    }
    return out;
  };
  std::vector<Var> state{x0};
  const std::size_t accumulators = sum_probes ? 1 : probes.size();
  for (std::size_t k = 0; k < accumulators; ++k) state.push_back(tape.constant(Tensor({rows, 1})));
  return integrate_system(sys, std::move(state), spec, span, options);
}

}  // namespace

TraceOptions parse_trace_mode(const std::string& mode, int probes) {
  if (mode == "exact") return {TraceMode::Exact, 1, ProbeKind::Gaussian};
  if (mode == "hutchinson") return {TraceMode::Hutchinson, probes, ProbeKind::Gaussian};
  if (mode == "hutchinson_rademacher") return {TraceMode::Hutchinson, probes, ProbeKind::Rademacher};
  throw ConfigError("unknown trace mode '" + mode + "' (expected exact, hutchinson or hutchinson_rademacher)");
}

TraceEstimate jacobian_trace(const VelocityField& field, const Var& x, double t, const TraceOptions& options,
                             Rng& rng) {
  const Var v = field(x, t);
  const auto probes = draw_probes(x.rows(), x.cols(), options, rng);
  const std::vector<Var> forms = probe_quadratic_forms(x, v, probes);
  if (options.mode == TraceMode::Exact) {
    Var acc = forms.front();
    for (std::size_t k = 1; k < forms.size(); ++k) acc = add(acc, forms[k]);
    return {acc, Tensor({x.rows(), 1})};
  }
  return {mean_of(forms), spread(forms)};
}

Var standard_normal_log_density(const Var& x) {
  const double c = -0.5 * static_cast<double>(x.cols()) * std::log(2.0 * std::numbers::pi);
  return add_scalar(scale(row_sum(square(x)), Real{-0.5}), static_cast<Real>(c));
}

LogDensity log_prob(const VelocityField& field, const Var& x_data, const PathSchedule& schedule,
                    const SolverSpec& spec, const TraceOptions& options, Rng& rng, bool differentiable) {
  const bool exact = options.mode == TraceMode::Exact;
  const auto probes = draw_probes(x_data.rows(), x_data.cols(), options, rng);
  const TimeSpan span{schedule.data_time(), schedule.prior_time()};
  const std::vector<Var> end =
      augmented_solve(field, x_data, span, spec, probes, exact, IntegrateOptions{differentiable, nullptr});
  const std::vector<Var> acc(end.begin() + 1, end.end());
  const Var ell = mean_of(acc);
  return {add(standard_normal_log_density(end[0]), ell), end[0], exact ? Tensor({x_data.rows(), 1}) : spread(acc)};
}

SampleWithLogDensity sample_with_log_prob(const VelocityField& field, const Var& x_prior,
                                          const PathSchedule& schedule, const SolverSpec& spec,
                                          const TraceOptions& options, Rng& rng) {
  const bool exact = options.mode == TraceMode::Exact;
  const auto probes = draw_probes(x_prior.rows(), x_prior.cols(), options, rng);
  const std::vector<Var> end = augmented_solve(field, x_prior, generation_span(schedule), spec, probes, exact);
  const std::vector<Var> acc(end.begin() + 1, end.end());
  const Var ell = mean_of(acc);
  return {end[0], sub(standard_normal_log_density(x_prior), ell),
          exact ? Tensor({x_prior.rows(), 1}) : spread(acc)};
}

LogDensityResult log_prob(const GenerativeModel& model, const Tensor& x, const Tensor& cond, const SolverSpec& spec,
                          const TraceOptions& options, Rng& rng) {
  Tape tape;
  const auto bound = model.bind(tape, false);
  Var c;
  if (model.spec().cond_dim > 0) c = tape.constant(broadcast_condition(cond, x.rows()));
  const LogDensity ld = log_prob(bound.field(c), tape.constant(x), model.schedule(), spec, options, rng, false);
  return {ld.terminal.value(), ld.log_density.value(), options, ld.std_error};
}

}  // namespace genpol
