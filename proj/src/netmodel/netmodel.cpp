#include "rescuesim/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rescuesim::netmodel {

double horizontal_distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

void UavState::check() const {
  if (!(altitude > 0.0)) throw std::domain_error("uav altitude must be positive");
  if (energy < reserve || energy > capacity) {
    throw std::domain_error("uav energy outside [reserve, capacity]");
  }
  if (velocity < 0.0 || velocity > max_velocity) {
    throw std::domain_error("uav velocity outside [0, max_velocity]");
  }
}

void Task::check() const {
  if (!(data_bits > 0.0 && cycles_per_bit > 0.0 && ttl > 0.0)) {
    throw std::domain_error("task size, cycles per bit and ttl must be positive");
  }
  if (urgency < 0.0 || urgency > 1.0) throw std::domain_error("task urgency must lie in [0,1]");
  if (!(output_ratio > 0.0 && output_ratio < 1.0)) {
    throw std::domain_error("task output ratio must lie in (0,1)");
  }
}

void ChannelParams::check() const {
  if (!(path_loss_exponent > 1.0)) throw std::domain_error("path-loss exponent must exceed 1");
  if (traffic_density < 0.0 || traffic_density > max_traffic_density) {
    throw std::domain_error("traffic density outside [0, chi_max]");
  }
  if (!(min_vehicle_velocity <= max_vehicle_velocity)) {
    throw std::domain_error("vehicle velocity bounds inverted");
  }
}

double flying_power(double velocity, double acceleration, double lambda1, double lambda2) {
  if (!(velocity > 0.0)) {
    throw std::domain_error("flying_power: velocity must be positive (use flying_power_clamped to hover)");
  }
  const double accel_ratio = (acceleration * acceleration) / (kGravity * kGravity);
  return lambda1 * velocity * velocity * velocity + (lambda2 / velocity) * (1.0 + accel_ratio);
}

double flying_power_clamped(double velocity, double acceleration, double lambda1, double lambda2,
                            double floor) {
  return flying_power(std::max(velocity, floor), acceleration, lambda1, lambda2);
}

double average_vehicle_velocity(double density, const ChannelParams& params) {
  if (density < 0.0 || density > params.max_traffic_density) {
    throw std::domain_error("average_vehicle_velocity: density outside [0, chi_max]");
  }
  return std::max(params.min_vehicle_velocity,
                  params.max_vehicle_velocity * (1.0 - density / params.max_traffic_density));
}

double arrivals_per_slot(double density, const ChannelParams& params) {
  return density * average_vehicle_velocity(density, params) * params.slot_seconds;
}

std::vector<double> coverage_count(std::span<const double> arrivals, std::span<const double> leave_ratios) {
  if (arrivals.empty() || arrivals.size() != leave_ratios.size()) {
    throw std::domain_error("coverage_count: need n >= 1 slots with matching series lengths");
  }
  std::vector<double> count(arrivals.size());
  double previous = 0.0;
  for (std::size_t n = 0; n < arrivals.size(); ++n) {
    const double o = leave_ratios[n];
    if (o < 0.0 || o > 1.0) throw std::domain_error("coverage_count: leave ratio outside [0,1]");
    previous = (arrivals[n] + previous) * (1.0 - o);
    count[n] = previous;
  }
  return count;
}

double shannon_rate(double bandwidth, double tx_power, double distance, const ChannelParams& params) {
  if (!(distance > 0.0)) throw std::domain_error("link rate: distance must be positive");
  const double gain = params.reference_gain * std::pow(distance, -params.path_loss_exponent);
  const double noise_term =
      params.noise_model == NoiseModel::spectral_density ? bandwidth * params.noise : params.noise;
  return bandwidth * std::log2(1.0 + tx_power * gain / noise_term);
}

LinkRates link_rates(double distance, const ChannelParams& params, const UavState& uav,
                     const VehicleState& vehicle) {
  return LinkRates{
      .g2a = shannon_rate(vehicle.uplink_bandwidth, vehicle.tx_power, distance, params),
      .a2g = shannon_rate(uav.downlink_bandwidth, uav.tx_power, distance, params),
  };
}

double a2a_rate(double distance, const ChannelParams& params) {
  return shannon_rate(params.a2a_bandwidth, params.a2a_tx_power, distance, params);
}

OffloadTimes offload_delay(const Task& task, double aocr, double a2g_rate, const ReturnPath& path) {
  if (!(aocr > 0.0)) throw std::domain_error("offload_delay: AoCR must be positive");
  if (!(a2g_rate > 0.0) || !(path.g2a_rate > 0.0)) {
    throw std::domain_error("offload_delay: link rates must be positive");
  }
  OffloadTimes t;
  t.a2g = task.data_bits / a2g_rate;
  t.compute = task.cycles_per_bit * task.data_bits / aocr;
  const double result_bits = task.output_ratio * task.data_bits;
  t.g2a = result_bits / path.g2a_rate;
  if (!path.in_coverage) {
    if (!(path.relay_a2a_rate > 0.0)) throw std::domain_error("offload_delay: relay rate must be positive");
    t.g2a += result_bits / path.relay_a2a_rate;
  }
  t.total = t.a2g + t.compute + t.g2a;
  return t;
}

OffloadEnergy offload_energy(const Task& task, double aocr, const OffloadTimes& times, const UavState& uav,
                             const VehicleState& vehicle, double flying_power_watts) {
  OffloadEnergy e;
  e.compute = vehicle.switched_capacitance * task.cycles_per_bit * task.data_bits * aocr * aocr;
  e.a2g = uav.tx_power * times.a2g;
  e.flying = flying_power_watts * times.total;
  return e;
}

double local_execution_energy(const Task& task, const UavState& uav, double flying_power_watts) {
  const double f = uav.cpu_frequency;
  const double cycles = task.cycles_per_bit * task.data_bits;
  return uav.switched_capacitance * cycles * f * f + flying_power_watts * cycles / f;
}

bool meets_deadline(const Task& task, const OffloadTimes& times) { return times.total <= task.ttl; }

bool meets_energy_reserve(const UavState& uav, const OffloadEnergy& energy) {
  return uav.energy - energy.flying - energy.a2g >= uav.reserve;
}

bool still_in_coverage(Position vehicle, double velocity, double elapsed, Position uav, double range) {
  const Position moved{vehicle.x + velocity * elapsed, vehicle.y};
  return horizontal_distance(moved, uav) <= range;
}

}  // namespace rescuesim::netmodel
