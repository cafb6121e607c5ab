#pragma once

// Static Stackelberg offloading game between one UAV (leader, payment y in cents)
// and one vehicle (follower, AoCR x in GHz). Per-pair terms are separable, so the
// multi-vehicle payoff is a sum of single-pair payoffs.

#include <optional>
#include <span>
#include <vector>

#include "rescuesim/netmodel.hpp"

namespace rescuesim::game {

struct GameParams {
  double rho = 162.0;        // satisfaction parameter of the UAV
  double varpi = 0.5;        // weight of payment against delay in the UAV cost
  double lambda_p = 8.0;
  double lambda_c = 0.05;
  double lambda_e = 0.01;
  double psi = 10.0;         // unit compute cost of the vehicle
  double x_max = 6.0;        // GHz
  double y_max = 11.0;       // cents
  double alpha = 0.5;        // task urgency
  // Context held constant with respect to x, as in the equilibrium derivation.
  double delay = 0.0;           // Phi, seconds
  double vehicle_energy = 0.0;  // E^vfc + P^TX t^G2A, joules

  void check() const;
};

struct StrategyPair {
  double x = 0.0;
  double y = 0.0;
  bool participate = false;
};

/// lambda_p y x - (lambda_c psi x^2 + lambda_e E); zero when x = 0 (no participation).
double vehicle_payoff(double x, double y, const GameParams& p);

/// rho alpha ln(1+x) - (varpi lambda_p y x + (1-varpi) Phi); zero when x = 0.
double uav_payoff(double x, double y, const GameParams& p);

/// Sum over vehicles of the single-pair payoffs, one parameter set per vehicle.
double uav_payoff(std::span<const double> x, std::span<const double> y, std::span<const GameParams> p);

/// Physical context for the TTL and battery constraints.
struct FeasibilityContext {
  netmodel::Task task;
  netmodel::UavState uav;
  double a2g_rate = 0.0;
  netmodel::ReturnPath path;
  double flying_power = 0.0;  // W
};

bool feasible(double x, double y, const GameParams& p, const FeasibilityContext& ctx);

/// Payment at which the follower's response reaches x_max.
double payment_threshold(const GameParams& p);

/// Follower best response: x_max above the threshold, lambda_p y/(2 lambda_c psi) inside, 0 at y = 0.
double best_response_aocr(double y, const GameParams& p);

struct PaymentSolution {
  double y = 0.0;
  double theta = 0.0;
  double omega = 0.0;
  bool boundary = false;  // Theta >= 0
  bool clipped = false;   // raw optimum exceeded y_max
};

PaymentSolution optimal_payment(const GameParams& p);

struct Equilibrium {
  StrategyPair strategy;
  PaymentSolution payment;
  double printed_x = 0.0;  // x from the printed closed form, which lacks varpi in the denominator
  double vehicle_payoff = 0.0;
  double uav_payoff = 0.0;
};

Equilibrium equilibrium(const GameParams& p);

struct OracleResult {
  double x_hat = 0.0;
  double y_hat = 0.0;
  double grid_leader_best = 0.0;
  double closed_leader = 0.0;
  double leader_gap = 0.0;           // grid best minus closed form (<= resolution when correct)
  double resolution_bound = 0.0;
  double follower_cell_error = 0.0;  // |grid BR - closed BR| at the grid payment nearest y*, in cells
  double x_step = 0.0;
  double y_step = 0.0;
};

/// Brute force: for each grid y the follower picks its best grid x, the leader then picks
/// its best grid y. Grids include both ends and need at least 100 points per axis.
OracleResult grid_oracle(const GameParams& p, std::size_t x_points, std::size_t y_points);

/// Follower grid argmax for a fixed payment.
double grid_best_response(double y, const GameParams& p, std::size_t x_points);

// Analytic first derivatives.
double vehicle_payoff_dx(double x, double y, const GameParams& p);
double uav_payoff_dx(double x, double y, const GameParams& p);
double uav_payoff_dy(double x, double y, const GameParams& p);
/// Leader objective after substituting the interior follower response.
double reduced_leader_objective(double y, const GameParams& p);
double reduced_leader_objective_dy(double y, const GameParams& p);

/// Builds the delay and energy context of a task executed at x GHz.
struct PayoffContext {
  double delay = 0.0;
  double vehicle_energy = 0.0;
};
PayoffContext payoff_context(double x, const netmodel::Task& task, const netmodel::VehicleState& vehicle,
                             double a2g_rate, const netmodel::ReturnPath& path);

}  // namespace rescuesim::game
