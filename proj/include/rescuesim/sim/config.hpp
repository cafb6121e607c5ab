#pragma once

// Scenario configuration: JSON sections network, consensus, reputation, game,
// learning, offload, adversary, seeds. Unknown keys and out-of-range values are
// ConfigErrors.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "rescuesim/game/game.hpp"
#include "rescuesim/learning/dynamic.hpp"
#include "rescuesim/netmodel.hpp"
#include "rescuesim/reputation/reputation.hpp"

namespace rescuesim::sim {

using Json = nlohmann::json;

struct PartitionConfig {
  double start = 0.0;  // seconds
  double end = 0.0;    // seconds; no partition when end <= start
  double fraction = 0.0;        // P_p, share of committee members cut off
  double byzantine_share = 0.0;  // P_pb, share of the cut-off members that are Byzantine
  bool active() const { return end > start && fraction > 0.0; }
};

struct NetworkConfig {
  std::size_t full_nodes = 20;  // U
  double delta = 1.0;           // seconds
  double gst = 0.0;             // seconds
  double pre_gst_drop = 0.1;
  double post_gst_min = 0.01;
  double post_gst_max = 0.1;
  double uplink = 100e6;  // bytes/s, per sender, serialized
  PartitionConfig partition;
};

enum class ConsensusScheme { proposal, art, naive };
std::string to_string(ConsensusScheme s);
ConsensusScheme parse_consensus_scheme(const std::string& s);

struct ConsensusConfig {
  ConsensusScheme scheme = ConsensusScheme::proposal;
  std::size_t committee = 10;  // Z
  std::size_t level1 = 7;      // Psi (ART uses Z)
  std::size_t heights = 100;
  std::size_t reelection = 10;  // heights per epoch
  std::size_t election_sample = 3;
  std::size_t block_txs = 20;
  std::size_t tx_pool = 64;  // distinct pre-signed transactions cycled through blocks
  double propose_timeout = 6.0;
  double propose_increment = 0.5;
  double prevote_timeout = 3.0;
  double precommit_timeout = 3.0;
  double commit_wait = 0.001;
  std::size_t chunk_size = 64 * 1024;
  std::size_t report_lag = 2;  // heights to wait before forensics run on a height
  std::uint64_t report_fee = 1;
  double max_time = 200000.0;  // simulated seconds
  double energy_per_byte = 5e-6;
  double energy_per_verification = 1e-3;
};

struct OffloadConfig {
  std::size_t uavs = 10;
  std::size_t tasks_min = 10, tasks_max = 20;
  std::vector<double> data_mbit{2.0, 4.0, 6.0, 8.0};  // D_jk sweep, Mbit
  std::vector<double> densities{0.02, 0.04, 0.06};   // chi, vehicles/m per lane
  std::size_t lanes = 2;
  double road_length = 2000.0;  // m; UAVs sit evenly spaced over the road centre
  double lane_spacing = 5.0;    // m between lane centre lines
  double min_gap = 10.0;        // m, safe distance between vehicles on a lane
  std::size_t repetitions = 50;
  double cycles_min = 100, cycles_max = 200;
  double output_min = 0.3, output_max = 0.7;  // theta_jk
  double psi_min = 4, psi_max = 16;
  double alpha_min = 0.1, alpha_max = 0.9;
  double ttl = 60.0;  // seconds
  double lambda1 = 0.0037, lambda2 = 5.0206;
  std::string policy = "earliest_finish";  // earliest_finish | round_robin
  // Baseline without vehicles: tasks go to a few shared edge nodes on the road.
  std::size_t edge_nodes = 2;
  double edge_ghz = 20.0;
  netmodel::ChannelParams channel{.noise_model = netmodel::NoiseModel::total_power};
  netmodel::UavState uav;
  netmodel::VehicleState vehicle;
};

enum class Behavior { honest, cp, cv, vol, silent, invalid, spoofing, collusion };
std::string to_string(Behavior b);
Behavior parse_behavior(const std::string& s);

struct AdversaryConfig {
  double byzantine_ratio = 0.0;           // P_b, share of the committee
  std::vector<Behavior> behaviors{Behavior::spoofing};  // assigned round-robin to Byzantine nodes
  std::size_t switch_height = 20;          // spoofers turn at this height
  Behavior after_switch = Behavior::silent;
  bool strict_safety = false;  // reject P_b above floor((Z-1)/3)/Z
};

struct ScenarioConfig {
  NetworkConfig network;
  ConsensusConfig consensus;
  reputation::ReputationParams reputation;
  game::GameParams game;
  learning::DynamicGameConfig learning;
  OffloadConfig offload;
  AdversaryConfig adversary;
  std::uint64_t seed = 1;  // seeds.base; subsystem streams are derived from it

  /// Byzantine members implied by the ratio: round(P_b * Z).
  std::size_t byzantine_count() const;
  void check() const;
};

/// Defaults, then the document's values. Unknown keys throw ConfigError.
ScenarioConfig from_json(const Json& doc);
/// Every field, defaults included, in the same layout from_json reads.
Json to_json(const ScenarioConfig& c);

/// Reads and parses a file; missing files and parse errors throw ConfigError naming the path.
Json read_json_file(const std::string& path);

/// Applies "a.b.c=value" overrides. The value is parsed as JSON when possible, else taken as a string.
void apply_override(Json& doc, const std::string& assignment);

/// Dynamic-game setup for a scenario: `learning.vehicles` copies of the game section, derived seed.
learning::DynamicGameConfig dynamic_config(const ScenarioConfig& c);

}  // namespace rescuesim::sim
