#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "genpol/policy.hpp"

using namespace genpol;

namespace {

ModelSpec tiny_spec(std::size_t da = 1, std::size_t ds = 1) {
  ModelSpec spec;
  spec.schedule = PathSchedule::icfm();
  spec.action_dim = da;
  spec.cond_dim = ds;
  spec.hidden = {6};
  spec.time_embed_width = 4;
  return spec;
}

Critic tiny_critic(std::size_t ds, std::size_t da, std::uint64_t seed) {
  CriticConfig cc;
  cc.hidden = {5};
  Rng rng(seed);
  return Critic(ds, da, cc, rng);
}

struct GmpgFixture {
  GenerativeModel mu, pi;
  Critic critic;
  Tensor states = Tensor::from_rows({{0.2}, {-0.5}, {1.0}});
  GmpgConfig cfg;

  GmpgFixture() {
    Rng a(1), b(2);
    mu = GenerativeModel(tiny_spec(), a);
    pi = GenerativeModel(tiny_spec(), b);
    critic = tiny_critic(1, 1, 3);
    cfg.beta = 2.0;
    cfg.solver = {SolverScheme::Midpoint, 10};
  }

  double loss(const GenerativeModel& p, bool dynamic) const {
    Tape tape;
    Rng rng(7);
    const auto bound = p.bind(tape, true);
    return (dynamic ? gmpg_loss(bound, mu, critic, states, cfg, rng)
                    : gmpg_static_loss(bound, mu, critic, states, cfg, rng))
        .loss.value()
        .item();
  }

  std::vector<Tensor> grad(bool dynamic) const {
    Tape tape;
    Rng rng(7);
    const auto bound = pi.bind(tape, true);
    const auto terms = dynamic ? gmpg_loss(bound, mu, critic, states, cfg, rng)
                               : gmpg_static_loss(bound, mu, critic, states, cfg, rng);
    const GradientMap g = tape.backward(terms.loss);
    std::vector<Tensor> out;
    for (const Var& v : bound.params()) out.push_back(grad_of(g, v));
    return out;
  }

  // Max relative error of the taped gradient against central differences.
  double fd_error(bool dynamic) {
    const auto ad = grad(dynamic);
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t k = 0; k < pi.net().params().size(); ++k) {
      for (std::size_t i = 0; i < pi.net().params()[k].numel(); ++i) {
        Real& w = pi.net().params()[k][i];
        const Real keep = w;
        w = keep + h;
        const double up = loss(pi, dynamic);
        w = keep - h;
        const double down = loss(pi, dynamic);
        w = keep;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(ad[k][i] - fd) / (std::abs(fd) + 1e-8));
      }
    }
    return worst;
  }
};

}  // namespace

TEST_CASE("exponential weights") {
  const Tensor adv = Tensor::from_rows({{0.0}, {10.0}, {-1.0}});
  const Tensor w = exponential_weights(adv, 1.0, 100.0);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 100.0);
  CHECK(w[2] == doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(exponential_weights(adv, 0.0, 100.0), DomainError);
  CHECK_THROWS_AS(exponential_weights(adv, -1.0, 100.0), DomainError);
  CHECK_THROWS_AS(parse_weight_mode("linear"), ConfigError);
}

TEST_CASE("softmax weights") {
  const Tensor q = Tensor::from_rows({{1.0}, {2.0}, {3.0}, {1000.0}, {999.0}, {-5.0}});
  const Tensor w = softmax_weights(q, 3, 2.0);
  CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w[3] + w[4] + w[5] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w[2] / w[1] == doctest::Approx(std::exp(2.0)));
  CHECK(std::isfinite(w[3]));
  Tensor shifted = q;
  for (std::size_t i = 0; i < 3; ++i) shifted[i] += 50;
  const Tensor ws = softmax_weights(shifted, 3, 2.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(ws[i] == doctest::Approx(w[i]).epsilon(1e-12));
  CHECK_THROWS_AS(softmax_weights(q, 1, 1.0), DomainError);
  CHECK_THROWS_AS(softmax_weights(q, 4, 1.0), ShapeError);
}

TEST_CASE("gmpo with beta = 0 reproduces pretraining bit for bit") {
  const auto bandit = make_tilted_gaussian_bandit(1, 1.0, 500, 4);
  TrainConfig tc;
  tc.steps = 25;
  tc.batch_size = 32;
  tc.adam.lr = 1e-3;
  Rng ia(9), ib(9);
  GenerativeModel m1(tiny_spec(), ia), m2(tiny_spec(), ib);
  Rng ra(11), rb(11);
  const auto h1 = pretrain_behavior(bandit.data, m1, tc, ra);
  GmpoConfig gc;
  gc.beta = 0.0;
  gc.train = tc;
  const auto h2 = train_gmpo(bandit.data, tiny_critic(1, 1, 5), m2, gc, rb);
  REQUIRE(h1.size() == h2.size());
  for (std::size_t i = 0; i < h1.size(); ++i) {
    CHECK(h1[i].loss == h2[i].loss);
    CHECK(h2[i].mean_weight == 1.0);
  }
  CHECK(std::ranges::equal(m1.net().params().back().values(), m2.net().params().back().values()));
  gc.beta = -1.0;
  CHECK_THROWS_AS(train_gmpo(bandit.data, tiny_critic(1, 1, 5), m2, gc, rb), DomainError);
}

TEST_CASE("softmax gmpo needs a behavior model and keeps the mean weight at one") {
  const auto bandit = make_tilted_gaussian_bandit(1, 1.0, 100, 4);
  Rng init(1);
  GenerativeModel mu(tiny_spec(), init), pi(tiny_spec(), init);
  GmpoConfig gc;
  gc.mode = WeightMode::Softmax;
  gc.k = 4;
  gc.train.steps = 3;
  gc.train.batch_size = 16;
  gc.behavior_solver = {SolverScheme::Euler, 4};
  Rng rng(2);
  CHECK_THROWS_AS(train_gmpo(bandit.data, tiny_critic(1, 1, 5), pi, gc, rng), ConfigError);
  const auto h = train_gmpo(bandit.data, tiny_critic(1, 1, 5), pi, gc, rng, &mu);
  for (const auto& m : h) CHECK(m.mean_weight == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dynamic gmpg loss gradient matches finite differences") {
  GmpgFixture fx;
  const double err = fx.fd_error(true);
  MESSAGE("dynamic gmpg max rel error " << err);
  CHECK(err < 1e-3);
}

TEST_CASE("static gmpg surrogate gradient matches finite differences of the surrogate") {
  // The surrogate treats its coefficient as a constant, so compare against
  // differences of mean(log pi * c) with c frozen at the unperturbed policy.
  GmpgFixture fx;
  Tape tape;
  Rng rng(7);
  const auto bound = fx.pi.bind(tape, true);
  const auto terms = gmpg_static_loss(bound, fx.mu, fx.critic, fx.states, fx.cfg, rng);
  Tensor coef({terms.actions.rows(), 1});
  for (std::size_t i = 0; i < coef.numel(); ++i)
    coef[i] = static_cast<Real>(terms.weights[i] * (-fx.cfg.beta * terms.q[i] + terms.log_pi[i] - terms.log_mu[i]));
  CHECK(terms.loss.value().item() == doctest::Approx((terms.log_pi.values()[0] * coef[0] +
                                                      terms.log_pi.values()[1] * coef[1] +
                                                      terms.log_pi.values()[2] * coef[2]) /
                                                     3.0));
  const auto surrogate = [&](const GenerativeModel& p) {
    Tape t;
    Rng r(0);
    const auto b = p.bind(t, true);
    const auto lp = log_prob(b.field(t.constant(fx.states)), t.constant(terms.actions), p.schedule(), fx.cfg.solver,
                             fx.cfg.trace, r);
    return mean(mul(lp.log_density, coef)).value().item();
  };
  Rng again(7);
  const auto ad = gmpg_static_grad(fx.pi, fx.mu, fx.critic, fx.states, fx.cfg, again);
  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t k = 0; k < fx.pi.net().params().size(); ++k)
    for (std::size_t i = 0; i < fx.pi.net().params()[k].numel(); ++i) {
      Real& w = fx.pi.net().params()[k][i];
      const Real keep = w;
      w = keep + h;
      const double up = surrogate(fx.pi);
      w = keep - h;
      const double down = surrogate(fx.pi);
      w = keep;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(ad[k][i] - fd) / (std::abs(fd) + 1e-8));
    }
  MESSAGE("static gmpg max rel error " << worst);
  CHECK(worst < 1e-3);
}

TEST_CASE("static gradient vanishes when pi = mu and the critic is flat") {
  GmpgFixture fx;
  fx.pi = fx.mu;
  for (auto& p : fx.critic.q_net().params()) p = Tensor(p.shape());
  for (auto& p : fx.critic.v_net().params()) p = Tensor(p.shape());
  fx.cfg.beta = 1.0;
  Rng rng(3);
  const auto g = gmpg_static_grad(fx.pi, fx.mu, fx.critic, fx.states, fx.cfg, rng);
  for (const auto& t : g)
    for (Real v : t.values()) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("gmpg rejects non-velocity models") {
  GmpgFixture fx;
  ModelSpec spec = tiny_spec();
  spec.schedule = PathSchedule::gvp();
  spec.parameterization = Parameterization::Noise;
  Rng init(1);
  const GenerativeModel noise_model(spec, init);
  Tape tape;
  Rng rng(0);
  CHECK_THROWS_AS(gmpg_loss(noise_model.bind(tape, true), fx.mu, fx.critic, fx.states, fx.cfg, rng),
                  UnsupportedError);
  CHECK_THROWS_AS(gmpg_loss(fx.pi.bind(tape, true), noise_model, fx.critic, fx.states, fx.cfg, rng),
                  UnsupportedError);
}

TEST_CASE("train_gmpg starts from the behavior model and records advantages") {
  GmpgFixture fx;
  const auto bandit = make_tilted_gaussian_bandit(1, 1.0, 50, 1);
  fx.cfg.train.steps = 2;
  fx.cfg.train.batch_size = 4;
  GenerativeModel policy;
  Rng rng(0);
  const auto h = train_gmpg(bandit.data, fx.critic, fx.mu, policy, fx.cfg, rng);
  REQUIRE(h.size() == 2);
  CHECK(std::isfinite(h[0].mean_advantage));
  CHECK(policy.spec().hidden == fx.mu.spec().hidden);
  fx.cfg.beta = 0.0;
  CHECK_THROWS_AS(train_gmpg(bandit.data, fx.critic, fx.mu, policy, fx.cfg, rng), DomainError);
}

TEST_CASE("act shapes and determinism") {
  Rng init(1);
  const GenerativeModel m(tiny_spec(2, 3), init);
  const Tensor s = Tensor({5, 3}, 0.1);
  Rng a(4), b(4);
  const Tensor x = act(m, s, {SolverScheme::Rk4_38, 8}, a);
  const Tensor y = act(m, s, {SolverScheme::Rk4_38, 8}, b);
  CHECK(x.rows() == 5);
  CHECK(x.cols() == 2);
  CHECK(std::ranges::equal(x.values(), y.values()));
}
