#include <boost/math/tools/roots.hpp>
#include <cmath>

#include "doctest.h"
#include "genpol/data.hpp"

using namespace genpol;

namespace {

// tau-expectile of a weighted discrete distribution by bracketed root finding
// on the first-order condition.
double expectile(const std::vector<double>& q, const std::vector<double>& p, double tau) {
  const auto foc = [&](double v) {
    double g = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) g += p[i] * (q[i] > v ? tau : 1.0 - tau) * (q[i] - v);
    return g;
  };
  const auto [lo, hi] = std::minmax_element(q.begin(), q.end());
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(foc, *lo - 1.0, *hi + 1.0,
                                                   boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

CriticConfig small_config(double tau, double gamma) {
  CriticConfig c;
  c.tau = tau;
  c.gamma = gamma;
  c.hidden = {32};
  c.adam = AdamConfig{1e-2};
  return c;
}

}  // namespace

TEST_CASE("expectile loss examples") {
  const Tensor u = Tensor::from_rows({{1.0}, {-1.0}});
  CHECK(expectile_loss(u, 0.7) == doctest::Approx(0.5));
  CHECK(expectile_loss(Tensor::from_rows({{2.0}}), 0.7) == doctest::Approx(2.8));
  CHECK(expectile_loss(Tensor::from_rows({{-2.0}}), 0.7) == doctest::Approx(1.2));
  CHECK(expectile_loss(Tensor::from_rows({{2.0}}), 0.9) == doctest::Approx(3.6));
  CHECK(expectile_loss(Tensor::from_rows({{-2.0}}), 0.9) == doctest::Approx(0.4));
  CHECK(std::abs(expectile_loss(Tensor::from_rows({{1e-9}}), 0.8) - expectile_loss(Tensor::from_rows({{-1e-9}}), 0.8)) <
        1e-18);
  CHECK_THROWS_AS(expectile_loss(u, 0.0), DomainError);
  CHECK_THROWS_AS(expectile_loss(u, 1.0), DomainError);
}

TEST_CASE("tau = 0.5 is exactly half the mean squared error") {
  Rng rng(3);
  const Tensor u = rng.normal_tensor(64, 1);
  double mse = 0.0;
  for (Real v : u.values()) mse += v * v;
  mse /= 64.0;
  CHECK(expectile_loss(u, 0.5) == 0.5 * mse);
  Tape tape;
  CHECK(expectile_loss(tape.constant(u), 0.5).value().item() == 0.5 * mse);
}

TEST_CASE("taped expectile loss gradient") {
  Rng rng(4);
  const Tensor u = rng.normal_tensor(10, 1);
  CHECK(grad_check([](Tape&, const Var& x) { return expectile_loss(x, 0.7); }, u) < 1e-6);
}

TEST_CASE("bandit V converges to the expectile of Q") {
  // One state, two actions, 30% of the rows take the rewarding action.
  const std::size_t n = 10;
  Tensor a({n, 1}), r({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    const bool good = i % 10 < 3;
    a[i] = good ? 1 : -1;
    r[i] = good ? 1 : 0;
  }
  const OfflineDataset d = make_dataset(Tensor({n, 1}), a, r, Tensor({n, 1}), Tensor({n, 1}, 1.0));
  const double tau = 0.9;
  const double want = expectile({0.0, 1.0}, {0.7, 0.3}, tau);
  CHECK(want == doctest::Approx(0.27 / 0.34).epsilon(1e-10));

  Rng rng(1);
  const auto cfg = small_config(tau, 0.99);
  Critic critic(1, 1, cfg, rng);
  auto opt = CriticOptimizers::for_critic(critic, cfg.adam);
  for (int step = 0; step < 2000; ++step) iql_step(critic, d.all(), opt);
  const double v = critic.v_value(Tensor({1, 1}))[0];
  MESSAGE("V " << v << ", expectile " << want);
  CHECK(std::abs(v - want) < 0.05);
  CHECK(critic.q_value(Tensor({1, 1}), Tensor({1, 1}, 1.0))[0] == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("chain MDP matches the tabular fixed point") {
  const std::size_t states = 5;
  const double tau = 0.8, gamma = 0.9;
  const OfflineDataset d = make_chain_mdp(states);

  // Tabular oracle: V(s) = expectile over the two actions of r + gamma (1 - done) V(s').
  std::vector<double> v(states, 0.0);
  const auto q_of = [&](std::size_t row) {
    std::size_t next = 0;
    while (d.s_next.at(row, next) == 0) ++next;
    return d.r[row] + gamma * (1.0 - d.done[row]) * v[next];
  };
  for (int it = 0; it < 500; ++it)
    for (std::size_t s = 0; s + 1 < states; ++s) v[s] = expectile({q_of(2 * s), q_of(2 * s + 1)}, {0.5, 0.5}, tau);

  Rng rng(2);
  const auto cfg = small_config(tau, gamma);
  Critic critic(states, 1, cfg, rng);
  auto opt = CriticOptimizers::for_critic(critic, cfg.adam);
  for (int step = 0; step < 3000; ++step) iql_step(critic, d.all(), opt);

  const Tensor vs = critic.v_value(d.s);
  const Tensor qs = critic.q_value(d.s, d.a);
  for (std::size_t row = 0; row < d.size(); ++row) {
    std::size_t s = 0;
    while (d.s.at(row, s) == 0) ++s;
    CHECK(vs[row] == doctest::Approx(v[s]).epsilon(0.05));
    CHECK(std::abs(qs[row] - q_of(row)) < 0.05);
  }
}

TEST_CASE("single transition and error paths") {
  Rng rng(5);
  const auto cfg = small_config(0.7, 0.99);
  Critic critic(2, 1, cfg, rng);
  auto opt = CriticOptimizers::for_critic(critic, cfg.adam);
  const TransitionBatch one{Tensor::from_rows({{0.1, 0.2}}), Tensor::from_rows({{0.5}}), Tensor::from_rows({{1.0}}),
                            Tensor::from_rows({{0.0, 0.0}}), Tensor::from_rows({{0.0}})};
  const auto l = iql_step(critic, one, opt);
  CHECK(std::isfinite(l.v_loss));
  CHECK(std::isfinite(l.q_loss));
  const Tensor adv = critic.advantage(one.s, one.a);
  CHECK(adv[0] == doctest::Approx(critic.q_value(one.s, one.a)[0] - critic.v_value(one.s)[0]));
  CHECK_THROWS_AS(critic.q_value(Tensor({1, 3}), one.a), ShapeError);
  TransitionBatch bad = one;
  bad.r = Tensor::from_rows({{NAN}});
  CHECK_THROWS(iql_step(critic, bad, opt));
}
