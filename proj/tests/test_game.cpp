#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "hflsim/game.hpp"
#include "hflsim/rng.hpp"

using namespace hflsim;

namespace {

GameConfig two_pop() {
  GameConfig g;
  g.populations = {{2000, 10, 10}, {4000, 10, 10}};
  g.servers = {{100, 2}, {300, 4}};
  return g;
}

GameConfig single_pop() {
  GameConfig g;
  g.populations = {{2000, 10, 10}};
  g.servers = {{100, 2}, {100, 2}};
  return g;
}

}  // namespace

TEST_CASE("utility: saturated single population gets the full pool") {
  auto g = single_pop();
  auto s = explicit_state(g, {1.0, 0.0});
  // reward = 100 * 2000 / 2000, costs = 0.001*(2+10) + 0.001*10
  CHECK(utility(0, 0, s, g) == doctest::Approx(100.0 - 0.012 - 0.010).epsilon(1e-12));
}

TEST_CASE("utility: empty server pays pure cost") {
  auto g = single_pop();
  auto s = explicit_state(g, {1.0, 0.0});
  CHECK(utility(0, 1, s, g) == doctest::Approx(-0.001 * (2 + 10) - 0.001 * 10).epsilon(1e-12));
}

TEST_CASE("utility: two-population value against an independent expression") {
  auto g = two_pop();
  auto s = explicit_state(g, {0.5, 0.5, 0.25, 0.75});
  // per-capita cut of server 1's pool, evaluated from scratch:
  double load = 2000.0 * 0.5 + 4000.0 * 0.25;
  double expected = 100.0 * 2000.0 / load - 0.001 * (2.0 + 10.0) - 0.001 * 10.0;
  CHECK(expected == doctest::Approx(99.978).epsilon(1e-12));
  CHECK(utility(0, 0, s, g) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("utility: index out of range is an argument error") {
  auto g = two_pop();
  auto s = uniform_state(g);
  CHECK_THROWS_AS(utility(2, 0, s, g), std::invalid_argument);
  CHECK_THROWS_AS(utility(0, 2, s, g), std::invalid_argument);
}

TEST_CASE("average_utility: degenerate mixture picks the pure utility") {
  auto g = two_pop();
  auto s = explicit_state(g, {1.0, 0.0, 0.0, 1.0});
  CHECK(average_utility(0, s, g) == doctest::Approx(utility(0, 0, s, g)));
}

TEST_CASE("average_utility: identical servers under uniform shares") {
  GameConfig g;
  g.populations = {{3000, 10, 10}};
  g.servers = {{100, 2}, {100, 2}, {100, 2}};
  auto s = uniform_state(g);
  CHECK(average_utility(0, s, g) == doctest::Approx(utility(0, 1, s, g)).epsilon(1e-12));
}

TEST_CASE("average_utility: three-server dot-product oracle") {
  GameConfig g;
  g.populations = {{3000, 10, 10}, {3000, 30, 30}};
  g.servers = {{100, 2}, {300, 4}, {500, 6}};
  auto s = explicit_state(g, {0.5, 0.3, 0.2, 0.1, 0.6, 0.3});
  double expected = 0.0;
  for (size_t n = 0; n < 3; ++n) expected += utility(1, n, s, g) * s.at(1, n);
  CHECK(average_utility(1, s, g) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("replicator_rhs: extinct strategies stay extinct") {
  auto g = two_pop();
  auto s = explicit_state(g, {0.0, 1.0, 0.4, 0.6});
  auto f = replicator_rhs(s, g);
  CHECK(f[0] == 0.0);
}

TEST_CASE("replicator_rhs: identical servers and uniform state is a fixed point") {
  GameConfig g;
  g.populations = {{2000, 10, 10}, {4000, 20, 20}};
  g.servers = {{100, 2}, {100, 2}};
  auto s = uniform_state(g);
  for (double v : replicator_rhs(s, g)) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("replicator_rhs: signs match an independent evaluation at (0.1, 0.1)") {
  auto g = two_pop();
  auto s = explicit_state(g, {0.1, 0.9, 0.1, 0.9});
  // independent per-capita evaluation
  double l1 = 2000 * 0.1 + 4000 * 0.1, l2 = 2000 * 0.9 + 4000 * 0.9;
  auto u = [&](double d, double gamma, double load, double sn, double c, double m) {
    return gamma * d / load - 0.001 * (sn + c) - 0.001 * m;
  };
  double u11 = u(2000, 100, l1, 2, 10, 10), u12 = u(2000, 300, l2, 4, 10, 10);
  double u21 = u(4000, 100, l1, 2, 10, 10), u22 = u(4000, 300, l2, 4, 10, 10);
  double ubar1 = 0.1 * u11 + 0.9 * u12, ubar2 = 0.1 * u21 + 0.9 * u22;
  auto f = replicator_rhs(s, g);
  CHECK(f[0] * (u11 - ubar1) > 0.0);  // same sign
  CHECK(f[1] * (u12 - ubar1) > 0.0);
  CHECK(f[2] * (u21 - ubar2) > 0.0);
  CHECK(f[3] * (u22 - ubar2) > 0.0);
  CHECK(f[0] == doctest::Approx(g.delta * 0.1 * (u11 - ubar1)).epsilon(1e-12));
}

TEST_CASE("replicator_rhs: rows sum to zero") {
  auto g = two_pop();
  auto rng = make_rng(7);
  for (int t = 0; t < 50; ++t) {
    PopulationState s(2, 2);
    for (size_t z = 0; z < 2; ++z) {
      auto row = sample_simplex(rng, 2);
      s.at(z, 0) = row[0];
      s.at(z, 1) = row[1];
    }
    auto f = replicator_rhs(s, g);
    CHECK(std::abs(f[0] + f[1]) < 1e-9);
    CHECK(std::abs(f[2] + f[3]) < 1e-9);
  }
}

TEST_CASE("euler_step: fixed point is preserved") {
  GameConfig g;
  g.populations = {{2000, 10, 10}};
  g.servers = {{100, 2}, {100, 2}};
  auto s = uniform_state(g);
  auto next = euler_step(s, g);
  CHECK(next.at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(next.at(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("euler_step: per-entry change bounded by dt * max|rhs| before renormalization") {
  auto g = two_pop();
  auto s = explicit_state(g, {0.3, 0.7, 0.6, 0.4});
  auto f = replicator_rhs(s, g);
  double fmax = 0.0;
  for (double v : f) fmax = std::max(fmax, std::abs(v));
  // reproduce the pre-renormalization update and bound it
  for (size_t z = 0; z < 2; ++z)
    for (size_t n = 0; n < 2; ++n) {
      double raw = s.at(z, n) + g.dt * f[z * 2 + n];
      CHECK(std::abs(raw - s.at(z, n)) <= g.dt * fmax + 1e-15);
    }
}

TEST_CASE("euler_step: simplex preserved over many steps") {
  auto g = two_pop();
  auto s = explicit_state(g, {0.2, 0.8, 0.7, 0.3});
  for (int t = 0; t < 2000; ++t) s = euler_step(s, g);
  CHECK(s.valid(1e-9));
}

TEST_CASE("sign property: above-average utility share grows before renormalization") {
  auto g = two_pop();
  auto s = explicit_state(g, {0.1, 0.9, 0.1, 0.9});
  auto f = replicator_rhs(s, g);
  double u0 = utility(0, 0, s, g);
  double bar0 = average_utility(0, s, g);
  REQUIRE(u0 > bar0);
  CHECK(f[0] > 0.0);  // strictly increasing direction for x in (0,1)
}

TEST_CASE("run_to_equilibrium: symmetric game converges immediately to uniform") {
  GameConfig g;
  g.populations = {{3000, 10, 10}};
  g.servers = {{100, 2}, {100, 2}, {100, 2}};
  auto run = run_to_equilibrium(g, uniform_state(g));
  CHECK(run.status == RunStatus::Converged);
  CHECK(run.steps == 0);
  for (size_t n = 0; n < 3; ++n)
    CHECK(run.final_state.at(0, n) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("run_to_equilibrium: non-convergence is an explicit status") {
  auto g = two_pop();
  g.max_steps = 5;  // far too few
  auto run = run_to_equilibrium(g, explicit_state(g, {0.1, 0.9, 0.1, 0.9}));
  CHECK(run.status == RunStatus::NoConvergence);
  CHECK(run.last_residual >= g.eq_tol);
}

TEST_CASE("run_to_equilibrium: converged state satisfies the equal-utility property") {
  auto g = two_pop();
  g.dt = 0.02;
  g.max_steps = 20'000'000;
  auto run = run_to_equilibrium(g, explicit_state(g, {0.3, 0.7, 0.4, 0.6}));
  REQUIRE(run.status == RunStatus::Converged);
  CHECK(run.utility_gap <= g.resolved_utility_eq_tol());
  CHECK(run.last_residual < g.eq_tol);
  // trajectory invariants
  const auto& traj = run.trajectory;
  REQUIRE(traj.size() > 1);
  CHECK(traj.states.size() == traj.times.size());
  CHECK(traj.utilities.size() == traj.times.size());
  CHECK(traj.avg_utilities.size() == traj.times.size());
  CHECK(traj.residuals.size() == traj.times.size());
  for (double r : traj.residuals) CHECK(r >= 0.0);
}

TEST_CASE("init_state: uniform fills 1/N") {
  auto g = two_pop();
  auto s = uniform_state(g);
  CHECK(s.at(0, 0) == 0.5);
  CHECK(s.at(1, 1) == 0.5);
}

TEST_CASE("init_state: same seed gives identical states") {
  auto g = two_pop();
  CHECK(random_state(g, 99) == random_state(g, 99));
}

TEST_CASE("init_state: random rows sum to one within 1e-12") {
  GameConfig g;
  g.populations = {{3000, 10, 10}, {3000, 20, 20}, {3000, 30, 30}};
  g.servers = {{100, 2}, {300, 4}, {500, 6}};
  for (uint64_t i = 0; i < 1000; ++i) {
    auto s = random_state(g, split_seed(5, i));
    for (size_t z = 0; z < s.rows(); ++z) {
      double sum = 0.0;
      for (size_t n = 0; n < s.cols(); ++n) sum += s.at(z, n);
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("init_state: explicit matrix violating the simplex is rejected") {
  auto g = two_pop();
  CHECK_THROWS_AS(explicit_state(g, {0.5, 0.6, 0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(explicit_state(g, {0.5, 0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("extinction invariance over a long run") {
  auto g = two_pop();
  auto s = explicit_state(g, {0.0, 1.0, 0.5, 0.5});
  for (int t = 0; t < 5000; ++t) s = euler_step(s, g);
  CHECK(s.at(0, 0) == 0.0);
}

TEST_CASE("determinism: identical config and init give bit-identical trajectories") {
  auto g = two_pop();
  g.max_steps = 3000;
  auto init = random_state(g, 123);
  auto a = run_to_equilibrium(g, init);
  auto b = run_to_equilibrium(g, init);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (size_t t = 0; t < a.trajectory.size(); ++t)
    CHECK(a.trajectory.states[t] == b.trajectory.states[t]);
  CHECK(a.final_state == b.final_state);
}
