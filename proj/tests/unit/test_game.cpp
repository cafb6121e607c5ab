#include <cmath>

#include "doctest.h"
#include "rescuesim/game/game.hpp"
#include "rescuesim/rng.hpp"

using namespace rescuesim;
using namespace rescuesim::game;

namespace {
GameParams base(double psi, double alpha) {
  GameParams p;
  p.psi = psi;
  p.alpha = alpha;
  p.lambda_e = 0.0;
  return p;
}
}  // namespace

TEST_CASE("payoff examples") {
  auto p = base(16, 0.5);
  CHECK(vehicle_payoff(4, 0.8, p) == doctest::Approx(12.8));
  CHECK(vehicle_payoff(0, 0.8, p) == 0.0);
  CHECK(vehicle_payoff(4, 1.6, p) - vehicle_payoff(4, 0.8, p) == doctest::Approx(8 * 0.8 * 4));
  CHECK(uav_payoff(6, 0.3, p) == doctest::Approx(81 * std::log(7.0) - 7.2));
  CHECK(uav_payoff(0, 0.3, p) == 0.0);
  CHECK(uav_payoff(3, 0.4, p) < uav_payoff(3, 0.3, p));
  std::vector<double> xs{6, 3}, ys{0.3, 0.2};
  std::vector<GameParams> ps{p, p};
  CHECK(uav_payoff(xs, ys, ps) == doctest::Approx(uav_payoff(6, 0.3, p) + uav_payoff(3, 0.2, p)));
}

TEST_CASE("follower best response") {
  auto p = base(4, 0.5);
  CHECK(best_response_aocr(0, p) == 0);
  CHECK(payment_threshold(p) == doctest::Approx(0.3));
  CHECK(best_response_aocr(0.3, p) == doctest::Approx(6));
  CHECK(best_response_aocr(0.2, p) == doctest::Approx(4));
  CHECK(best_response_aocr(5.0, p) == doctest::Approx(6));
}

TEST_CASE("optimal payment and equilibrium") {
  auto p = base(4, 0.5);
  auto s = optimal_payment(p);
  CHECK(s.theta == doctest::Approx(64.2));
  CHECK(s.boundary);
  CHECK(s.y == doctest::Approx(0.3));
  auto e = equilibrium(p);
  CHECK(e.strategy.x == doctest::Approx(6));
  CHECK(e.strategy.y == doctest::Approx(0.3));

  // Interior case. Omega = varpi^2 lc^2 psi^2 + varpi lc psi rho alpha = 0.16 + 6.48.
  auto q = base(16, 0.1);
  auto t = optimal_payment(q);
  CHECK(t.theta == doctest::Approx(-51));
  CHECK(t.omega == doctest::Approx(6.64));
  CHECK(t.y == doctest::Approx((std::sqrt(6.64) - 0.4) / 4));
  auto eq = equilibrium(q);
  CHECK(eq.strategy.x == doctest::Approx(8 * eq.strategy.y / (2 * 0.05 * 16)));
  CHECK(eq.printed_x == doctest::Approx(eq.strategy.x * q.varpi));
  // the interior payment is the stationary point of the reduced objective
  CHECK(std::abs(reduced_leader_objective_dy(t.y, q)) < 1e-9);

  auto z = base(4, 0.0);
  auto zs = optimal_payment(z);
  CHECK(zs.theta < 0);
  CHECK(zs.omega == doctest::Approx(std::pow(0.5 * 0.05 * 4, 2)));
  CHECK(zs.y == doctest::Approx(0.0).epsilon(1e-12));

  // Large psi: x* vanishes while y* approaches rho alpha / (2 varpi lambda_p).
  double prev_x = INFINITY;
  for (double psi : {1e2, 1e4, 1e6}) {
    auto big = equilibrium(base(psi, 0.5));
    CHECK(big.strategy.x < prev_x);
    prev_x = big.strategy.x;
  }
  CHECK(prev_x < 1e-2);
  CHECK(equilibrium(base(1e8, 0.5)).strategy.y == doctest::Approx(81.0 / 8.0).epsilon(1e-4));
}

TEST_CASE("continuity across the Theta sign change") {
  // Solve Theta = 0 for alpha, then compare both branches there.
  auto p = base(8, 0.5);
  const double c = p.varpi * p.lambda_c * p.psi;
  p.alpha = 4 * c * p.x_max * (1 + p.x_max) / p.rho;
  REQUIRE(p.alpha < 1);
  const double omega = c * c + c * p.rho * p.alpha;
  const double interior = (std::sqrt(omega) - c) / (p.varpi * p.lambda_p);
  CHECK(interior == doctest::Approx(payment_threshold(p)).epsilon(1e-12));
}

TEST_CASE("clipping to the payment cap") {
  auto p = base(4, 0.9);
  p.y_max = 0.1;
  auto s = optimal_payment(p);
  CHECK(s.clipped);
  CHECK(s.y == 0.1);
  CHECK(equilibrium(p).strategy.x == doctest::Approx(best_response_aocr(0.1, p)));
}

TEST_CASE("grid oracle agrees with the closed form") {
  Rng rng(23);
  for (int i = 0; i < 20; ++i) {
    auto p = base(rng.uniform(4, 16), rng.uniform(0.1, 0.9));
    auto o = grid_oracle(p, 400, 400);
    CHECK(o.leader_gap <= o.resolution_bound);
    CHECK(o.follower_cell_error <= 1.0);
  }
  auto coarse = grid_oracle(base(10, 0.5), 100, 100);
  auto fine = grid_oracle(base(10, 0.5), 1000, 1000);
  CHECK(std::abs(fine.leader_gap) <= std::abs(coarse.leader_gap) + 1e-12);
  CHECK_THROWS(grid_oracle(base(10, 0.5), 50, 1000));
}

TEST_CASE("no profitable unilateral grid deviation at the equilibrium") {
  Rng rng(29);
  for (int i = 0; i < 50; ++i) {
    auto p = base(rng.uniform(4, 16), rng.uniform(0.1, 0.9));
    auto e = equilibrium(p);
    const double vx = vehicle_payoff(e.strategy.x, e.strategy.y, p);
    for (int j = 0; j <= 600; ++j) {
      const double x = p.x_max * j / 600.0;
      CHECK(vehicle_payoff(x, e.strategy.y, p) <= vx + 1e-9);
    }
    const double ul = reduced_leader_objective(e.strategy.y, p);
    for (int j = 1; j <= 600; ++j) {
      const double y = payment_threshold(p) * j / 600.0;
      CHECK(reduced_leader_objective(y, p) <= ul + 1e-9);
    }
  }
}

TEST_CASE("analytic derivatives match central differences") {
  Rng rng(31);
  const double h = 1e-6;
  for (int i = 0; i < 200; ++i) {
    auto p = base(rng.uniform(4, 16), rng.uniform(0.1, 0.9));
    const double x = rng.uniform(0.1, 5.9);
    const double y = rng.uniform(0.01, payment_threshold(p) * 0.99);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    CHECK(rel((vehicle_payoff(x + h, y, p) - vehicle_payoff(x - h, y, p)) / (2 * h), vehicle_payoff_dx(x, y, p)) <
          1e-6);
    CHECK(rel((uav_payoff(x + h, y, p) - uav_payoff(x - h, y, p)) / (2 * h), uav_payoff_dx(x, y, p)) < 1e-6);
    CHECK(rel((uav_payoff(x, y + h, p) - uav_payoff(x, y - h, p)) / (2 * h), uav_payoff_dy(x, y, p)) < 1e-6);
    CHECK(rel((reduced_leader_objective(y + h, p) - reduced_leader_objective(y - h, p)) / (2 * h),
              reduced_leader_objective_dy(y, p)) < 1e-6);
    // concavity: second differences are negative
    CHECK(vehicle_payoff(x + 1e-3, y, p) + vehicle_payoff(x - 1e-3, y, p) < 2 * vehicle_payoff(x, y, p));
  }
}

TEST_CASE("feasibility") {
  GameParams p;
  FeasibilityContext ctx;
  ctx.a2g_rate = 1e7;
  ctx.path = netmodel::ReturnPath{true, 1e7, 0};
  ctx.task.ttl = 100;
  ctx.flying_power = 100;
  CHECK(feasible(4, 0.5, p, ctx));
  CHECK_FALSE(feasible(7, 0.5, p, ctx));
  CHECK_FALSE(feasible(4, 12, p, ctx));
  auto tight = ctx;
  tight.task.ttl = 0.5 * ctx.task.data_bits / ctx.a2g_rate;
  for (double x : {0.5, 3.0, 6.0}) CHECK_FALSE(feasible(x, 0.5, p, tight));

  // Battery exactly at the reserve after costs is still feasible.
  auto t = netmodel::offload_delay(ctx.task, 4e9, ctx.a2g_rate, ctx.path);
  const double spent = ctx.uav.tx_power * t.a2g + ctx.flying_power * t.total;
  auto edge = ctx;
  edge.uav.energy = edge.uav.reserve + spent;
  CHECK(feasible(4, 0.5, p, edge));
  edge.uav.energy -= 1e-6;
  CHECK_FALSE(feasible(4, 0.5, p, edge));
}

TEST_CASE("parameter checks") {
  GameParams p;
  CHECK_NOTHROW(p.check());
  p.varpi = 0;
  CHECK_THROWS_AS(p.check(), ConfigError);
  p = GameParams{};
  p.alpha = 1.2;
  CHECK_THROWS_AS(p.check(), ConfigError);
}
