#pragma once

// Repeated UAV/vehicle pricing game played by learning agents. Within a slot the UAV
// announces its payments first, each vehicle then picks its AoCR having received the
// payment, and both collect the game-module payoffs.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rescuesim/game/game.hpp"
#include "rescuesim/learning/agents.hpp"

namespace rescuesim::learning {

enum class Scheme { dqn, qlearn, greedy };
std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);  // ConfigError on unknown names

inline AgentParams agent_defaults(double epsilon) {
  AgentParams a;
  a.epsilon = epsilon;
  a.reward_scale = 100.0;
  return a;
}

struct DynamicGameConfig {
  std::vector<game::GameParams> vehicles{game::GameParams{}};  // one entry per vehicle; UAV terms taken per pair
  std::size_t slots = 9000;
  std::size_t payment_levels = 22;  // W
  std::size_t aocr_levels = 12;     // V
  // reward_scale multiplies the normalized payoffs; at 1 the per-level payoff gaps are too small to learn.
  AgentParams uav = agent_defaults(0.92);
  AgentParams vehicle = agent_defaults(0.95);
  Scheme scheme = Scheme::dqn;
  std::optional<Scheme> vehicle_scheme;  // defaults to `scheme`
  bool normalize_rewards = true;  // scale payoffs by the largest attainable magnitude on the grid
  std::optional<double> fixed_payment;  // if set, the UAV is replaced by this constant payment
  std::uint64_t seed = 1;
  std::size_t summary_window = 500;

  void check() const;
};

struct SlotRecord {
  std::size_t slot = 0;
  std::vector<double> y, x;                // executed
  std::vector<double> greedy_y, greedy_x;  // argmax of the current estimates
  double uav_reward = 0.0;
  std::vector<double> vehicle_reward;
};

struct DynamicSummary {
  std::vector<double> mean_greedy_x, mean_greedy_y;  // per vehicle, over the summary window
  std::vector<double> mean_x, mean_y;                // executed actions, same window
  double mean_uav_reward = 0.0;
  double mean_vehicle_reward = 0.0;  // averaged over vehicles
};

struct DynamicResult {
  std::vector<SlotRecord> trace;
  DynamicSummary summary;
  std::size_t truncations = 0;  // slots where the UAV state had to drop old entries
  // Final greedy policies probed with a window holding one value in every slot:
  // vehicle_policy[i][w] = AoCR level for payment level w, uav_policy[v][i] = payment level
  // for vehicle i when every vehicle kept AoCR level v. Empty for the greedy scheme.
  std::vector<std::vector<std::uint32_t>> vehicle_policy;
  std::vector<std::vector<std::uint32_t>> uav_policy;
};

DynamicResult run_dynamic_game(const DynamicGameConfig& config);

/// Largest |payoff| over the action grids, used for reward normalization.
double uav_reward_bound(const game::GameParams& p);
double vehicle_reward_bound(const game::GameParams& p);

/// slot,agent,action,greedy,reward,epsilon with one row per agent head and slot.
void write_training_csv(std::ostream& os, const DynamicResult& r, const DynamicGameConfig& c);

}  // namespace rescuesim::learning
