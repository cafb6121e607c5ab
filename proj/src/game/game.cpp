#include "rescuesim/game/game.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rescuesim::game {

constexpr double kGiga = 1e9;

void GameParams::check() const {
  for (double v : {rho, lambda_p, lambda_c, psi, x_max, y_max}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("game parameters must be finite and positive");
  }
  if (!(varpi > 0.0 && varpi <= 1.0)) throw ConfigError("game.varpi must lie in (0,1]");
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("game.alpha must lie in [0,1]");
  if (lambda_e < 0.0 || delay < 0.0 || vehicle_energy < 0.0) throw ConfigError("game energy/delay terms must be >= 0");
}

double vehicle_payoff(double x, double y, const GameParams& p) {
  if (x <= 0.0) return 0.0;
  return p.lambda_p * y * x - (p.lambda_c * p.psi * x * x + p.lambda_e * p.vehicle_energy);
}

double uav_payoff(double x, double y, const GameParams& p) {
  if (x <= 0.0) return 0.0;
  return p.rho * p.alpha * std::log1p(x) - (p.varpi * p.lambda_p * y * x + (1.0 - p.varpi) * p.delay);
}

double uav_payoff(std::span<const double> x, std::span<const double> y, std::span<const GameParams> p) {
  if (x.size() != y.size() || x.size() != p.size()) throw std::domain_error("uav_payoff: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += uav_payoff(x[i], y[i], p[i]);
  return total;
}

bool feasible(double x, double y, const GameParams& p, const FeasibilityContext& ctx) {
  if (x < 0.0 || x > p.x_max || y < 0.0 || y > p.y_max) return false;
  if (x == 0.0) return true;
  const auto times = netmodel::offload_delay(ctx.task, x * kGiga, ctx.a2g_rate, ctx.path);
  if (!netmodel::meets_deadline(ctx.task, times)) return false;
  netmodel::VehicleState unused;
  const auto energy = netmodel::offload_energy(ctx.task, x * kGiga, times, ctx.uav, unused, ctx.flying_power);
  return netmodel::meets_energy_reserve(ctx.uav, energy);
}

double payment_threshold(const GameParams& p) { return 2.0 * p.lambda_c * p.psi * p.x_max / p.lambda_p; }

double best_response_aocr(double y, const GameParams& p) {
  if (y <= 0.0) return 0.0;
  if (y >= payment_threshold(p)) return p.x_max;
  return p.lambda_p * y / (2.0 * p.lambda_c * p.psi);
}

PaymentSolution optimal_payment(const GameParams& p) {
  PaymentSolution s;
  const double c = p.varpi * p.lambda_c * p.psi;
  const double ra = p.rho * p.alpha;
  s.theta = ra - 4.0 * c * p.x_max * (1.0 + p.x_max);
  s.omega = c * c + c * ra;
  if (s.theta >= 0.0) {
    s.boundary = true;
    s.y = payment_threshold(p);
  } else {
    s.y = (std::sqrt(s.omega) - c) / (p.varpi * p.lambda_p);
  }
  if (s.y > p.y_max) {
    s.y = p.y_max;
    s.clipped = true;
  }
  s.y = std::max(0.0, s.y);
  return s;
}

Equilibrium equilibrium(const GameParams& p) {
  Equilibrium e;
  e.payment = optimal_payment(p);
  e.strategy.y = e.payment.y;
  e.strategy.x = best_response_aocr(e.payment.y, p);
  e.strategy.participate = e.strategy.x > 0.0;
  const double c = p.varpi * p.lambda_c * p.psi;
  e.printed_x = e.payment.boundary ? p.x_max : (std::sqrt(e.payment.omega) - c) / (2.0 * p.lambda_c * p.psi);
  e.vehicle_payoff = vehicle_payoff(e.strategy.x, e.strategy.y, p);
  e.uav_payoff = uav_payoff(e.strategy.x, e.strategy.y, p);
  return e;
}

namespace {
double grid_value(std::size_t i, std::size_t n, double max) {
  return max * static_cast<double>(i) / static_cast<double>(n - 1);
}
}  // namespace

double grid_best_response(double y, const GameParams& p, std::size_t x_points) {
  if (x_points < 2) throw std::domain_error("grid needs at least two points");
  double best_x = 0.0;
  double best = vehicle_payoff(0.0, y, p);
  for (std::size_t i = 1; i < x_points; ++i) {
    const double x = grid_value(i, x_points, p.x_max);
    const double v = vehicle_payoff(x, y, p);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

OracleResult grid_oracle(const GameParams& p, std::size_t x_points, std::size_t y_points) {
  if (x_points < 100 || y_points < 100) throw std::domain_error("grid_oracle: at least 100 points per axis");
  OracleResult r;
  r.x_step = p.x_max / static_cast<double>(x_points - 1);
  r.y_step = p.y_max / static_cast<double>(y_points - 1);
  r.grid_leader_best = -INFINITY;
  for (std::size_t j = 0; j < y_points; ++j) {
    const double y = grid_value(j, y_points, p.y_max);
    const double x = grid_best_response(y, p, x_points);
    const double u = uav_payoff(x, y, p);
    if (u > r.grid_leader_best) {
      r.grid_leader_best = u;
      r.x_hat = x;
      r.y_hat = y;
    }
  }
  const auto eq = equilibrium(p);
  r.closed_leader = eq.uav_payoff;
  r.leader_gap = r.grid_leader_best - r.closed_leader;
  // Lipschitz constants of the leader payoff in x and y over the box.
  const double lx = p.rho * p.alpha + p.varpi * p.lambda_p * p.y_max;
  const double ly = p.varpi * p.lambda_p * p.x_max;
  r.resolution_bound = 2.0 * (lx * r.x_step + ly * r.y_step);

  const double y_near = std::round(eq.strategy.y / r.y_step) * r.y_step;
  r.follower_cell_error = std::abs(grid_best_response(y_near, p, x_points) - best_response_aocr(y_near, p)) / r.x_step;
  return r;
}

double vehicle_payoff_dx(double x, double y, const GameParams& p) {
  return p.lambda_p * y - 2.0 * p.lambda_c * p.psi * x;
}

double uav_payoff_dx(double x, double y, const GameParams& p) {
  return p.rho * p.alpha / (1.0 + x) - p.varpi * p.lambda_p * y;
}

double uav_payoff_dy(double x, double, const GameParams& p) { return -p.varpi * p.lambda_p * x; }

double reduced_leader_objective(double y, const GameParams& p) {
  const double k = p.lambda_p / (2.0 * p.lambda_c * p.psi);
  return p.rho * p.alpha * std::log1p(k * y) - p.varpi * p.lambda_p * k * y * y - (1.0 - p.varpi) * p.delay;
}

double reduced_leader_objective_dy(double y, const GameParams& p) {
  const double k = p.lambda_p / (2.0 * p.lambda_c * p.psi);
  return p.rho * p.alpha * k / (1.0 + k * y) - 2.0 * p.varpi * p.lambda_p * k * y;
}

PayoffContext payoff_context(double x, const netmodel::Task& task, const netmodel::VehicleState& vehicle,
                             double a2g_rate, const netmodel::ReturnPath& path) {
  if (!(x > 0.0)) return {};
  const auto t = netmodel::offload_delay(task, x * kGiga, a2g_rate, path);
  const double compute_energy = vehicle.switched_capacitance * task.cycles_per_bit * task.data_bits * (x * kGiga) *
                                (x * kGiga);
  return PayoffContext{t.total, compute_energy + vehicle.tx_power * t.g2a};
}

}  // namespace rescuesim::game
