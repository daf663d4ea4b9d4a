#include <cmath>
#include <numbers>

#include "doctest.h"
#include "genpol/matching.hpp"
#include "genpol/mlp.hpp"
#include "genpol/schedules.hpp"

using namespace genpol;

namespace {

const double kPi = std::numbers::pi;

Tensor row2(double a, double b) { return Tensor::from_rows({{a, b}}); }

}  // namespace

TEST_CASE("alpha_sigma closed forms") {
  const auto gvp = PathSchedule::gvp();
  auto [a0, s0] = alpha_sigma(gvp, 0.0);
  CHECK(a0 == 1.0);
  CHECK(s0 == 0.0);
  auto [a, s] = alpha_sigma(gvp, 0.5);
  CHECK(a == doctest::Approx(0.7071068));
  CHECK(s == doctest::Approx(0.7071068));
  const auto vp = PathSchedule::vpsde();
  CHECK(alpha_sigma(vp, 1.0).alpha == doctest::Approx(std::exp(-5.025)).epsilon(1e-12));
  CHECK(alpha_sigma(vp, 0.0).sigma == 0.0);
  CHECK_THROWS_AS(alpha_sigma(PathSchedule::icfm(), 0.5), UnsupportedError);
  CHECK_THROWS_AS(alpha_sigma(gvp, 1.5), DomainError);
}

TEST_CASE("gvp alpha^2 + sigma^2 = 1") {
  for (int k = 0; k <= 100; ++k) {
    const auto [a, s] = alpha_sigma(PathSchedule::gvp(), k / 100.0);
    CHECK(std::abs(a * a + s * s - 1.0) < 1e-12);
  }
}

TEST_CASE("drift and diffusion values") {
  const auto dd = drift_diffusion(PathSchedule::gvp(), 0.5);
  CHECK(dd.f == doctest::Approx(-kPi / 2).epsilon(1e-12));
  CHECK(dd.g2 == doctest::Approx(kPi).epsilon(1e-12));
  const auto vp = PathSchedule::vpsde();
  for (double t : {0.1, 0.4, 0.9}) {
    CHECK(drift_diffusion(vp, t).f == doctest::Approx(-vp.beta(t) / 2));
    CHECK(drift_diffusion(vp, t).g2 == doctest::Approx(vp.beta(t)));
  }
  const auto near0 = drift_diffusion(PathSchedule::gvp(), 0.0);  // clipped to 1e-3
  CHECK(std::abs(near0.f) < 5e-3);
  CHECK(std::abs(near0.g2) < 1e-2);
  CHECK(std::isfinite(drift_diffusion(PathSchedule::gvp(), 1.0).f));
  CHECK_THROWS_AS(drift_diffusion(PathSchedule::icfm(), 0.5), UnsupportedError);
}

TEST_CASE("drift/diffusion agree with finite differences of alpha and sigma") {
  const double h = 1e-6;
  for (const auto& s : {PathSchedule::vpsde(), PathSchedule::gvp()}) {
    for (int k = 1; k <= 101; ++k) {
      const double t = 0.005 + 0.99 * (k - 1) / 100.0;
      const auto [a, sg] = alpha_sigma(s, t);
      const auto p = alpha_sigma(s, t + h);
      const auto m = alpha_sigma(s, t - h);
      const double da = (p.alpha - m.alpha) / (2 * h);
      const double dsig2 = (p.sigma * p.sigma - m.sigma * m.sigma) / (2 * h);
      const auto dd = drift_diffusion(s, t);
      CAPTURE(t);
      CHECK(std::abs(da - dd.f * a) <= 1e-4 * std::abs(dd.f * a));
      const double g2 = dsig2 - 2 * dd.f * sg * sg;
      CHECK(std::abs(g2 - dd.g2) <= 1e-4 * std::abs(dd.g2));
    }
  }
}

TEST_CASE("sample_path_point examples") {
  Rng rng(0);
  const Tensor x0 = row2(1.0, 0.0);
  const Tensor eps = row2(0.0, 1.0);
  const auto at0 = sample_path_point(PathSchedule::gvp(), x0, eps, Tensor::scalar(0.0), rng);
  CHECK(at0.x_t == x0);
  const auto mid = sample_path_point(PathSchedule::gvp(), x0, eps, Tensor::scalar(0.5), rng);
  CHECK(mid.x_t[0] == doctest::Approx(0.7071).epsilon(1e-4));
  CHECK(mid.x_t[1] == doctest::Approx(0.7071).epsilon(1e-4));
  const auto line = sample_path_point(PathSchedule::icfm(), row2(0, 0), row2(2, 4), Tensor::scalar(0.5), rng);
  CHECK(line.x_t == row2(1, 2));
  CHECK_THROWS_AS(sample_path_point(PathSchedule::gvp(), x0, Tensor::zeros(1, 3), Tensor::scalar(0.5), rng),
                  ShapeError);
}

TEST_CASE("target_score examples") {
  const auto gvp = PathSchedule::gvp();
  Rng rng(0);
  const Tensor x0 = row2(0.3, -0.2);
  const auto [a, s] = alpha_sigma(gvp, 0.5);
  const Tensor mean = row2(a * 0.3, a * -0.2);
  const Tensor zero = target_score(gvp, mean, x0, Tensor::scalar(0.5));
  CHECK(zero[0] == doctest::Approx(0.0));
  CHECK(zero[1] == doctest::Approx(0.0));
  const Tensor xt = sample_path_point(gvp, row2(0, 0), row2(1, 0), Tensor::scalar(0.5), rng).x_t;
  const Tensor sc = target_score(gvp, xt, row2(0, 0), Tensor::scalar(0.5));
  CHECK(sc[0] == doctest::Approx(-1.41421).epsilon(1e-5));
  const Tensor xt2 = sample_path_point(gvp, row2(0, 0), row2(2, 0), Tensor::scalar(0.5), rng).x_t;
  CHECK(target_score(gvp, xt2, row2(0, 0), Tensor::scalar(0.5))[0] == doctest::Approx(2 * sc[0]));
  CHECK_THROWS_AS(target_score(gvp, row2(0, 0), row2(0, 0), Tensor::scalar(0.0)), DomainError);
}

TEST_CASE("target_velocity examples") {
  const Tensor v = target_velocity(PathSchedule::icfm(), row2(0, 0), row2(2, 4), Tensor::scalar(0.3));
  CHECK(v == row2(2, 4));
  const Tensor g = target_velocity(PathSchedule::gvp(), row2(1, 0), row2(0, 1), Tensor::scalar(0.5));
  CHECK(g[0] == doctest::Approx(-1.1107).epsilon(1e-4));
  CHECK(g[1] == doctest::Approx(1.1107).epsilon(1e-4));
  // alpha' = 0 at t = 0 for GVP
  const Tensor z = target_velocity(PathSchedule::gvp(), row2(1, -1), row2(0, 0), Tensor::scalar(0.0));
  CHECK(z[0] == doctest::Approx(0.0));
  CHECK(z[1] == doctest::Approx(0.0));
}

TEST_CASE("convert examples") {
  const auto gvp = PathSchedule::gvp();
  const Tensor t = Tensor::scalar(0.5);
  const Tensor xt = row2(1, 0);
  const Tensor v0 = convert(Parameterization::Score, Parameterization::Velocity, gvp, xt, t, row2(0, 0));
  CHECK(v0[0] == doctest::Approx(-kPi / 2));
  CHECK(v0[1] == doctest::Approx(0.0));
  // velocity = f x - g^2/2 * score with score = -eps / sigma, so the noise term enters with a plus sign
  const Tensor v = convert(Parameterization::Noise, Parameterization::Velocity, gvp, xt, t, row2(0, 1));
  CHECK(v[0] == doctest::Approx(-1.5708).epsilon(1e-4));
  CHECK(v[1] == doctest::Approx(2.2214).epsilon(1e-4));
  const Tensor via = convert(Parameterization::Score, Parameterization::Velocity, gvp, xt, t,
                             convert(Parameterization::Noise, Parameterization::Score, gvp, xt, t, row2(0, 1)));
  for (int i = 0; i < 2; ++i) CHECK(std::abs(via[i] - v[i]) <= 1e-10 * std::max(1.0, std::abs(v[i])));
  CHECK_THROWS_AS(convert(Parameterization::Score, Parameterization::Velocity, PathSchedule::icfm(), xt, t, xt),
                  UnsupportedError);
}

TEST_CASE("conditional velocity equals converted conditional score on a grid") {
  Rng rng(21);
  for (const auto& s : {PathSchedule::vpsde(), PathSchedule::gvp()}) {
    for (int k = 0; k <= 100; ++k) {
      const double t = s.t_min() + (s.t_max() - s.t_min()) * k / 100.0;
      const Tensor tt = Tensor::scalar(t);
      const Tensor x0 = rng.normal_tensor(1, 3);
      const Tensor eps = rng.normal_tensor(1, 3);
      const Tensor xt = sample_path_point(s, x0, eps, tt, rng).x_t;
      const Tensor v = target_velocity(s, x0, eps, tt);
      const Tensor vc =
          convert(Parameterization::Score, Parameterization::Velocity, s, xt, tt, target_score(s, xt, x0, tt));
      for (int i = 0; i < 3; ++i) CHECK(std::abs(v[i] - vc[i]) <= 1e-8 * std::max(1.0, std::abs(v[i])));
    }
  }
}

TEST_CASE("convert round trips along every cycle") {
  Rng rng(4);
  const Parameterization ps[] = {Parameterization::Velocity, Parameterization::Noise, Parameterization::Score};
  for (const auto& s : {PathSchedule::vpsde(), PathSchedule::gvp()}) {
    for (double t : {0.05, 0.5, 0.95}) {
      const Tensor tt = Tensor::scalar(t);
      const Tensor xt = rng.normal_tensor(2, 2);
      const Tensor val = rng.normal_tensor(2, 2);
      for (auto a : ps)
        for (auto b : ps)
          for (auto c : ps) {
            const Tensor back = convert(c, a, s, xt, tt, convert(b, c, s, xt, tt, convert(a, b, s, xt, tt, val)));
            for (int i = 0; i < 4; ++i) CHECK(std::abs(back[i] - val[i]) <= 1e-10 * std::max(1.0, std::abs(val[i])));
          }
    }
  }
}

TEST_CASE("taped to_velocity matches convert") {
  Rng rng(6);
  const auto s = PathSchedule::vpsde();
  const Tensor xt = rng.normal_tensor(3, 2);
  const Tensor val = rng.normal_tensor(3, 2);
  const Tensor t = Tensor::from_rows({{0.2}, {0.5}, {0.8}});
  for (auto from : {Parameterization::Noise, Parameterization::Score}) {
    Tape tape;
    const Tensor a = to_velocity(from, s, tape.constant(xt), t, tape.constant(val)).value();
    const Tensor b = convert(from, Parameterization::Velocity, s, xt, t, val);
    for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("parsers reject unknown names") {
  CHECK(parse_path_kind("gvp") == PathKind::GVP);
  CHECK_THROWS_AS(parse_path_kind("linear"), ConfigError);
  CHECK_THROWS_AS(parse_parameterization("x0"), ConfigError);
  CHECK_THROWS_AS(parse_lambda("foo"), ConfigError);
}

namespace {

// Network that returns the exact conditional target for the rows it was built for.
NetworkModel oracle(Parameterization p, Tensor value) {
  return {p, [value](const Var& x, const Tensor&, const Var&) { return x.tape().constant(value); }};
}

}  // namespace

TEST_CASE("matching losses vanish at the conditional target") {
  Rng rng(1);
  const Tensor x0 = rng.normal_tensor(6, 2);
  const Tensor ones({6, 1}, 1.0);
  for (const auto& s : {PathSchedule::vpsde(), PathSchedule::gvp()}) {
    const MatchingDraw d = draw_matching_noise(s, 6, 2, rng);
    Tape tape;
    CHECK(dsm_loss(tape, oracle(Parameterization::Noise, d.noise), s, x0, Var{}, ones, d, LambdaWeighting::Vanilla)
              .value()
              .item() == doctest::Approx(0.0).scale(1.0));
    const Tensor v = target_velocity(s, x0, d.noise, d.t);
    CHECK(cfm_loss(tape, oracle(Parameterization::Velocity, v), s, x0, Var{}, ones, d, rng).value().item() ==
          doctest::Approx(0.0).scale(1.0));
  }
  const auto icfm = PathSchedule::icfm();
  const MatchingDraw d = draw_matching_noise(icfm, 6, 2, rng);
  Tape tape;
  const Tensor v = target_velocity(icfm, d.noise, x0, d.t);
  CHECK(cfm_loss(tape, oracle(Parameterization::Velocity, v), icfm, x0, Var{}, ones, d, rng).value().item() ==
        doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("zero weights give zero loss and zero gradient") {
  Rng rng(2);
  const auto s = PathSchedule::gvp();
  Tape tape;
  const Var w = tape.variable(Tensor::full(1, 2, 0.7));
  const NetworkModel m{Parameterization::Velocity, [&](const Var& x, const Tensor&, const Var&) { return mul(x, w); }};
  const Tensor x0 = rng.normal_tensor(5, 2);
  const Var loss = cfm_loss(tape, m, s, x0, Var{}, Tensor({5, 1}), draw_matching_noise(s, 5, 2, rng), rng);
  CHECK(loss.value().item() == 0.0);
  const auto grads = tape.backward(loss);
  for (Real g : grad_of(grads, w).values()) CHECK(g == 0.0);
}

TEST_CASE("degenerate icfm endpoints give half the mean squared output") {
  Rng rng(3);
  const auto s = PathSchedule::icfm();
  const Tensor c = Tensor::from_rows({{0.5, -1.0}});
  const NetworkModel m{Parameterization::Velocity,
                       [&](const Var& x, const Tensor&, const Var&) { return add(scale(x, 0), c); }};
  MatchingDraw d = draw_matching_noise(s, 4, 2, rng);
  d.noise = Tensor({4, 2});
  Tape tape;
  const double l = cfm_loss(tape, m, s, Tensor({4, 2}), Var{}, Tensor({4, 1}, 1.0), d, rng).value().item();
  CHECK(l == doctest::Approx(0.5 * (0.25 + 1.0) / 2));
}

TEST_CASE("matching error paths") {
  Rng rng(4);
  const Tensor x0 = rng.normal_tensor(3, 2);
  Tape tape;
  const auto vel = oracle(Parameterization::Velocity, Tensor({3, 2}));
  const auto noise = oracle(Parameterization::Noise, Tensor({3, 2}));
  const auto d = draw_matching_noise(PathSchedule::gvp(), 3, 2, rng);
  CHECK_THROWS_AS(dsm_loss(tape, noise, PathSchedule::icfm(), x0, Var{}, Tensor({3, 1}, 1.0), d,
                           LambdaWeighting::Unit),
                  UnsupportedError);
  CHECK_THROWS_AS(cfm_loss(tape, noise, PathSchedule::gvp(), x0, Var{}, Tensor({3, 1}, 1.0), d, rng),
                  UnsupportedError);
  CHECK_THROWS_AS(dsm_loss(tape, noise, PathSchedule::gvp(), x0, Var{}, Tensor::from_rows({{1}, {-1}, {1}}), d,
                           LambdaWeighting::Unit),
                  DomainError);
  CHECK_THROWS_AS(cfm_loss(tape, vel, PathSchedule::gvp(), x0, Var{}, Tensor({2, 1}, 1.0), d, rng), ShapeError);
}

namespace {

// Small velocity/noise network with its parameters as explicit leaves.
struct TinyNet {
  Mlp net;
  Var forward(const std::vector<Var>& p, const Var& x, const Tensor& t) const {
    BoundMlp b{&net, p};
    const Var parts[] = {x.tape().constant(t), x};
    return b.forward(hcat(parts));
  }
};

}  // namespace

TEST_CASE("matching losses match finite differences at batch 8") {
  Rng rng(10);
  TinyNet tiny{Mlp(MlpSpec{3, {8}, 2, Activation::Tanh}, rng)};
  const Tensor x0 = rng.normal_tensor(8, 2);
  Tensor w({8, 1});
  for (auto& v : w.values()) v = rng.uniform(0.2, 2.0);
  for (int which = 0; which < 3; ++which) {
    const PathSchedule s = which == 2 ? PathSchedule::icfm() : PathSchedule::vpsde();
    const MatchingDraw d = draw_matching_noise(s, 8, 2, rng);
    const auto r = grad_check(
        [&](Tape& tape, std::span<const Var> p) {
          const std::vector<Var> params(p.begin(), p.end());
          const auto p_of = which == 0 ? Parameterization::Noise : Parameterization::Velocity;
          NetworkModel m{p_of, [&](const Var& x, const Tensor& t, const Var&) { return tiny.forward(params, x, t); }};
          Rng unused(0);
          if (which == 0) return dsm_loss(tape, m, s, x0, Var{}, w, d, LambdaWeighting::Mlsm);
          return cfm_loss(tape, m, s, x0, Var{}, w, d, unused);
        },
        tiny.net.params());
    CAPTURE(which);
    CHECK(r.max_rel_error < 1e-3);
  }
}

TEST_CASE("unit weights equal the unweighted estimator and batch order does not matter") {
  Rng init(12);
  TinyNet tiny{Mlp(MlpSpec{3, {8}, 2, Activation::Tanh}, init)};
  const auto s = PathSchedule::gvp();
  const Tensor x0 = init.normal_tensor(6, 2);
  Tape tape;
  const auto params = tiny.net.bind(tape, false).params;
  const NetworkModel m{Parameterization::Velocity,
                       [&](const Var& x, const Tensor& t, const Var&) { return tiny.forward(params, x, t); }};
  Rng a(99), b(99);
  const MatchingConfig cfg;
  const double weighted = matching_loss(tape, m, s, x0, Var{}, Tensor({6, 1}, 1.0), cfg, a).value().item();
  // unweighted estimator written out directly from the same draws
  const MatchingDraw d = draw_matching_noise(s, 6, 2, b);
  const Tensor xt = sample_path_point(s, x0, d.noise, d.t, b).x_t;
  const Tensor target = target_velocity(s, x0, d.noise, d.t);
  const Tensor v = m.fn(tape.constant(xt), d.t, Var{}).value();
  double acc = 0.0;
  for (std::size_t i = 0; i < v.numel(); ++i) acc += 0.5 * (v[i] - target[i]) * (v[i] - target[i]);
  CHECK(weighted == doctest::Approx(acc / static_cast<double>(v.numel())).epsilon(1e-14));

  const std::size_t perm[] = {3, 0, 5, 1, 4, 2};
  MatchingDraw dp{d.t.gather_rows(perm), d.noise.gather_rows(perm)};
  Rng unused(0);
  const Tensor ones({6, 1}, 1.0);
  const double l1 = cfm_loss(tape, m, s, x0, Var{}, ones, d, unused).value().item();
  const double l2 = cfm_loss(tape, m, s, x0.gather_rows(perm), Var{}, ones, dp, unused).value().item();
  CHECK(l1 == doctest::Approx(l2).epsilon(1e-13));
}
