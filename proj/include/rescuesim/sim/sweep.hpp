#pragma once

// One-parameter sweeps producing the figure-family tables, plus a small worker
// pool for independent runs.

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "rescuesim/learning/dynamic.hpp"
#include "rescuesim/sim/config.hpp"

namespace rescuesim::sim {

enum class SweepParam { pb, block_size, chi, data, psi, z };
std::string to_string(SweepParam p);
SweepParam parse_sweep_param(const std::string& s);  // ConfigError on unknown names

struct SweepOptions {
  SweepParam param = SweepParam::pb;
  std::vector<double> values;
  std::vector<ConsensusScheme> schemes{ConsensusScheme::proposal};
  std::vector<learning::Scheme> learners{learning::Scheme::dqn, learning::Scheme::qlearn, learning::Scheme::greedy};
  std::size_t seeds = 1;    // runs use seeds base, base+1, ...
  std::size_t workers = 0;  // 0 = hardware concurrency
};

/// Flat table; every row has one cell per column.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
};

/// Column schemas:
///   pb          pb,scheme,seeds,mean_rounds,stderr_rounds,mean_latency_s,completed
///   block_size  block_txs,scheme,seeds,throughput_tx_per_s,mean_latency_s,mean_rounds
///   z           committee,scheme,seeds,messages_per_round,energy_per_block_j,bytes_per_block,mean_rounds
///   chi, data   the offload table (see write_offload_csv)
///   psi         psi,scheme,seeds,x,y,uav_payoff,vehicle_payoff,se_x,se_y,se_uav_payoff
Table run_sweep(const ScenarioConfig& base, const SweepOptions& opts);

/// Header line always written, so an empty table gives a headers-only file.
void write_csv(std::ostream& os, const Table& t);

/// Runs fn(0..n-1) on up to `workers` threads; results are placed by index so the
/// output does not depend on scheduling.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Consensus config adjusted for committee size Z: level-1 size keeps the default
/// 7/10 share and the network holds at least 2Z full nodes.
ScenarioConfig with_committee(const ScenarioConfig& base, std::size_t z);

}  // namespace rescuesim::sim
