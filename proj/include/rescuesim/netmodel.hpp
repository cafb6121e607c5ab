#pragma once

// Physical-layer arithmetic for the UAV/vehicle network: propulsion power,
// fluid traffic flow, A2G/G2A Shannon rates, offloading delay and energy.

#include <span>
#include <vector>

#include "rescuesim/types.hpp"

namespace rescuesim::netmodel {

constexpr double kGravity = 9.8;

struct Position {
  double x = 0.0;
  double y = 0.0;
};

double horizontal_distance(Position a, Position b);

struct UavState {
  NodeId id = 0;
  Position position;
  double altitude = 50.0;           // m, fixed per task
  double velocity = 10.0;           // m/s
  double acceleration = 2.0;        // m/s^2
  double energy = 500e3;            // J remaining
  double capacity = 500e3;          // J
  double reserve = 50e3;            // J
  double tx_power = 1.0;            // W
  double downlink_bandwidth = 0.5e6;  // Hz
  double max_velocity = 20.0;       // m/s
  double cpu_frequency = 0.5e9;     // cycles/s, local execution baseline
  double switched_capacitance = 1e-28;

  /// Throws std::domain_error when a documented invariant does not hold.
  void check() const;
};

struct VehicleState {
  NodeId id = 0;
  Position position;
  double velocity = 10.0;              // m/s along the road (x axis)
  double tx_power = 0.1;               // W
  double uplink_bandwidth = 10e6;      // Hz
  double switched_capacitance = 1e-28;
  double unit_cost = 10.0;             // psi_i
  double max_aocr = 6e9;               // cycles/s
};

struct Task {
  NodeId owner = 0;
  std::uint32_t index = 0;
  double data_bits = 4e6;
  double cycles_per_bit = 150.0;
  double ttl = 10.0;         // s
  double urgency = 0.5;      // [0,1]
  double output_ratio = 0.5; // (0,1)

  void check() const;
};

/// How sigma_0^2 enters the SNR denominator.
enum class NoiseModel {
  spectral_density,  // P*g / (B * sigma0^2), sigma0^2 in W/Hz
  total_power,       // P*g / sigma0^2, sigma0^2 in W
};

struct ChannelParams {
  double reference_gain = 1e-5;      // phi_0, linear (-50 dB)
  double path_loss_exponent = 2.0;   // mu > 1
  double noise = 1e-13;              // sigma_0^2
  NoiseModel noise_model = NoiseModel::spectral_density;
  double traffic_density = 0.02;     // chi, vehicles/m
  double max_traffic_density = 0.1;  // chi_max
  double min_vehicle_velocity = 24.0 / 3.6;
  double max_vehicle_velocity = 72.0 / 3.6;
  double a2a_bandwidth = 10e6;       // Hz
  double a2a_tx_power = 1.0;         // W
  double a2g_range = 200.0;          // m
  double a2a_range = 400.0;          // m
  double slot_seconds = 1.0;         // Delta_t
  double hover_velocity_floor = 0.1; // m/s

  void check() const;
};

/// Propulsion power lambda1 v^3 + (lambda2 / v)(1 + a^2/g^2). v must be > 0.
double flying_power(double velocity, double acceleration, double lambda1, double lambda2);

/// Same as flying_power but clamps v up to `floor` so hovering stays finite.
double flying_power_clamped(double velocity, double acceleration, double lambda1, double lambda2,
                            double floor);

/// Fluid traffic model: max(v_min, v_max (1 - chi/chi_max)).
double average_vehicle_velocity(double density, const ChannelParams& params);

/// Vehicles entering coverage per slot: chi * v_bar * Delta_t.
double arrivals_per_slot(double density, const ChannelParams& params);

/// Vehicles in a UAV's coverage for slots 1..n given per-slot arrivals and leave ratios.
std::vector<double> coverage_count(std::span<const double> arrivals, std::span<const double> leave_ratios);

/// Shannon rate B log2(1 + P phi0 d^-mu / noise_term).
double shannon_rate(double bandwidth, double tx_power, double distance, const ChannelParams& params);

struct LinkRates {
  double g2a = 0.0;  // vehicle -> UAV, bits/s
  double a2g = 0.0;  // UAV -> vehicle, bits/s
};

LinkRates link_rates(double distance, const ChannelParams& params, const UavState& uav,
                     const VehicleState& vehicle);

/// A2A relay rate, reusing the downlink Shannon form with the A2A bandwidth and power.
double a2a_rate(double distance, const ChannelParams& params);

/// Return path for the processed result.
struct ReturnPath {
  bool in_coverage = true;
  double g2a_rate = 0.0;        // to the origin UAV or to the relay UAV
  double relay_a2a_rate = 0.0;  // relay UAV -> origin UAV, used when !in_coverage
};

struct OffloadTimes {
  double a2g = 0.0;
  double compute = 0.0;
  double g2a = 0.0;
  double total = 0.0;  // Phi
};

/// Delay of one offloaded task executed at `aocr` cycles/s.
OffloadTimes offload_delay(const Task& task, double aocr, double a2g_rate, const ReturnPath& path);

struct OffloadEnergy {
  double compute = 0.0;  // E^vfc, spent by the vehicle
  double a2g = 0.0;      // E^A2G, spent by the UAV
  double flying = 0.0;   // E^fly, spent by the UAV
};

OffloadEnergy offload_energy(const Task& task, double aocr, const OffloadTimes& times, const UavState& uav,
                             const VehicleState& vehicle, double flying_power_watts);

/// Energy the UAV would spend executing the task itself (compute + propulsion while busy).
double local_execution_energy(const Task& task, const UavState& uav, double flying_power_watts);

/// TTL constraint: Phi <= T^max.
bool meets_deadline(const Task& task, const OffloadTimes& times);

/// Battery constraint: E_j - E^fly - E^A2G >= E_j^min (inclusive).
bool meets_energy_reserve(const UavState& uav, const OffloadEnergy& energy);

/// Whether a vehicle at `position` moving at `velocity` is still within `range` of `uav`
/// after `elapsed` seconds (horizontal distance along the road).
bool still_in_coverage(Position vehicle, double velocity, double elapsed, Position uav, double range);

}  // namespace rescuesim::netmodel
