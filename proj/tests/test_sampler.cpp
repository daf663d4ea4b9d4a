#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "genpol/sampler.hpp"

using namespace genpol;

namespace {

double solve_exp(SolverScheme scheme, int steps) {
  Tape tape;
  const VelocityField f = [](const Var& x, double) { return x; };
  const Var x = integrate(f, tape.constant(Tensor({1, 1}, 1.0)), {scheme, steps}, {0.0, 1.0});
  return x.value()[0];
}

// log2 of the error ratio between T and 2T on dx/dt = x.
double observed_order(SolverScheme scheme, int steps) {
  const double e1 = std::abs(solve_exp(scheme, steps) - std::exp(1.0));
  const double e2 = std::abs(solve_exp(scheme, 2 * steps) - std::exp(1.0));
  return std::log2(e1 / e2);
}

// exp(A) by a long Taylor series, for the linear-field oracle.
std::vector<double> expm(const std::vector<double>& a, int n) {
  std::vector<double> out(n * n, 0.0), term(n * n, 0.0);
  for (int i = 0; i < n; ++i) out[i * n + i] = term[i * n + i] = 1.0;
  for (int k = 1; k < 40; ++k) {
    std::vector<double> next(n * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) next[i * n + j] += term[i * n + l] * a[l * n + j] / k;
    term = next;
    for (int i = 0; i < n * n; ++i) out[i] += term[i];
  }
  return out;
}

}  // namespace

TEST_CASE("zero field leaves the state unchanged") {
  for (auto scheme : {SolverScheme::Euler, SolverScheme::Midpoint, SolverScheme::Rk4_38}) {
    Tape tape;
    const Tensor x0 = Tensor::from_rows({{0.3, -1.2}, {2.0, 0.5}});
    const VelocityField zero = [](const Var& x, double) { return x * Real{0}; };
    const Var x = integrate(zero, tape.constant(x0), {scheme, 7}, {1.0, 0.0});
    CHECK(std::ranges::equal(x.value().values(), x0.values()));
  }
}

TEST_CASE("dx/dt = x reaches e") {
  CHECK(std::abs(solve_exp(SolverScheme::Rk4_38, 32) - std::exp(1.0)) < 1e-6);
  CHECK(std::abs(solve_exp(SolverScheme::Euler, 1) - 2.0) < 1e-15);
  CHECK(std::abs(solve_exp(SolverScheme::Midpoint, 1) - 2.5) < 1e-15);
  CHECK(std::abs(solve_exp(SolverScheme::Rk4_38, 1) - (1.0 + 1.0 + 0.5 + 1.0 / 6 + 1.0 / 24)) < 1e-15);
}

TEST_CASE("convergence orders") {
  const double euler = observed_order(SolverScheme::Euler, 64);
  const double midpoint = observed_order(SolverScheme::Midpoint, 64);
  const double rk4 = observed_order(SolverScheme::Rk4_38, 16);
  MESSAGE("orders: euler " << euler << ", midpoint " << midpoint << ", rk4_38 " << rk4);
  CHECK(euler >= 0.9);
  CHECK(euler <= 1.1);
  CHECK(midpoint >= 1.8);
  CHECK(midpoint <= 2.2);
  CHECK(rk4 >= 3.8);
}

TEST_CASE("linear field matches the matrix exponential") {
  Rng rng(5);
  const int n = 3;
  std::vector<double> a(n * n);
  for (auto& v : a) v = 0.5 * rng.normal();
  Tensor at({3, 3});  // row-vector convention: dx/dt = x A^T
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) at.at(i, j) = a[j * n + i];
  const std::vector<double> e = expm(a, n);
  Tape tape;
  const Var m = tape.constant(at);
  const VelocityField f = [&](const Var& x, double) { return matmul(x, m); };
  const Tensor x0 = Tensor::from_rows({{1.0, -0.5, 0.25}});
  const Var x = integrate(f, tape.constant(x0), {SolverScheme::Rk4_38, 200}, {0.0, 1.0});
  for (int i = 0; i < n; ++i) {
    double want = 0.0;
    for (int j = 0; j < n; ++j) want += e[i * n + j] * x0[j];
    CHECK(x.value()[i] == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("trajectory records T+1 points and its end equals the result") {
  Tape tape;
  const VelocityField f = [](const Var& x, double) { return sin(x); };
  Trajectory tr;
  const Var x = integrate(f, tape.constant(Tensor::from_rows({{0.4}, {-1.0}})), {SolverScheme::Midpoint, 32},
                          {1.0 - 1e-3, 1e-3}, {false, &tr});
  REQUIRE(tr.t.size() == 33);
  REQUIRE(tr.x.size() == 33);
  CHECK(tr.t.front() == 1.0 - 1e-3);
  CHECK(tr.t.back() == 1e-3);
  for (std::size_t k = 1; k < tr.t.size(); ++k) CHECK(tr.t[k] < tr.t[k - 1]);
  CHECK(tr.x[0][0] == Real(0.4));
  CHECK(std::ranges::equal(tr.x.back().values(), x.value().values()));
}

TEST_CASE("non-differentiable mode keeps the tape flat and agrees bit-exactly") {
  const VelocityField f = [](const Var& x, double t) { return tanh(x) * Real(t); };
  const Tensor x0 = Tensor::from_rows({{0.1, 0.2}, {-0.3, 0.9}});
  Tape a, b;
  const Var xa = integrate(f, a.constant(x0), {SolverScheme::Rk4_38, 50}, {0.0, 1.0}, {true, nullptr});
  const Var xb = integrate(f, b.constant(x0), {SolverScheme::Rk4_38, 50}, {0.0, 1.0}, {false, nullptr});
  CHECK(std::ranges::equal(xa.value().values(), xb.value().values()));
  CHECK(b.size() < 5);
  CHECK(a.size() > 50);
}

TEST_CASE("generate with n = 0 and condition broadcast") {
  ModelSpec spec;
  spec.schedule = PathSchedule::icfm();
  spec.action_dim = 2;
  spec.cond_dim = 1;
  spec.hidden = {8};
  spec.time_embed_width = 4;
  Rng rng(1);
  const GenerativeModel model(spec, rng);
  const auto empty = generate(model, 0, {SolverScheme::Euler, 4}, Tensor({1, 1}), rng);
  CHECK(empty.samples.rows() == 0);
  const auto res = generate(model, 5, {SolverScheme::Euler, 4}, Tensor({1, 1}, 0.5), rng, true);
  CHECK(res.samples.rows() == 5);
  REQUIRE(res.trajectory.has_value());
  CHECK(res.trajectory->t.size() == 5);
  CHECK_THROWS_AS(broadcast_condition(Tensor({2, 1}), 5), ShapeError);
}

TEST_CASE("divergence reports the step") {
  Tape tape;
  const VelocityField f = [](const Var& x, double) { return square(x) * Real(1e10); };
  try {
    integrate(f, tape.constant(Tensor({1, 1}, 1e100)), {SolverScheme::Euler, 10}, {0.0, 1.0});
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step == 1);
  }
  CHECK_THROWS_AS(integrate(f, tape.constant(Tensor({1, 1}, 1.0)), {SolverScheme::Euler, 0}, {0.0, 1.0}),
                  ConfigError);
  CHECK_THROWS_AS(parse_solver_scheme("heun"), ConfigError);
}
