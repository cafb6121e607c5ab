#pragma once

// Static-SE task offloading from UAVs to passing vehicles over a straight road,
// swept over traffic density chi and task size D.

#include <cstdint>
#include <ostream>
#include <vector>

#include "rescuesim/sim/config.hpp"

namespace rescuesim::sim {

struct OffloadPoint {
  double density = 0.0;    // chi, vehicles/m per lane
  double data_mbit = 0.0;  // D
  std::size_t tasks = 0;
  std::size_t offloaded = 0;
  std::size_t relayed = 0;  // result came back through a neighbouring UAV
  std::size_t local = 0;    // no feasible vehicle, run on the UAV
  double mean_vehicles = 0.0;  // vehicles on the road per repetition
  double mean_delay = 0.0;     // s, over all tasks
  double stderr_delay = 0.0;   // across repetitions
  double mean_delay_no_vfc = 0.0;
  double mean_saved_energy = 0.0;  // J per task, local minus offloaded UAV cost
  double stderr_saved_energy = 0.0;
  double mean_aocr = 0.0;     // GHz over offloaded tasks
  double mean_payment = 0.0;  // cents
  double mean_uav_payoff = 0.0;
  double mean_vehicle_payoff = 0.0;
};

struct OffloadMetrics {
  std::uint64_t seed = 0;
  std::size_t repetitions = 0;
  std::string policy;
  std::vector<OffloadPoint> points;  // densities outer, data sizes inner
};

OffloadMetrics run_offload(const ScenarioConfig& cfg);

/// Delay and saved-energy series, one row per (chi, D).
void write_offload_csv(std::ostream& os, const OffloadMetrics& m);
Json offload_summary_json(const OffloadMetrics& m);

}  // namespace rescuesim::sim
