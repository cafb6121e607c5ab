#pragma once

// Building blocks of the dynamic-game learners and the three agent kinds:
// DQN (CNN Q-network with replay), tabular Q and the myopic greedy baseline.

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "rescuesim/learning/qnetwork.hpp"
#include "rescuesim/rng.hpp"

namespace rescuesim::learning {

/// `levels` uniformly spaced points from 0 to `max`.
class ActionGrid {
 public:
  ActionGrid(std::size_t levels, double max);
  std::size_t size() const { return levels_; }
  double max() const { return max_; }
  double value(std::size_t level) const;
  /// Nearest level to v (ties go to the lower level); v is clamped to [0, max].
  std::size_t nearest(double v) const;

 private:
  std::size_t levels_;
  double max_;
};

/// Current state plus the prior `history` states, each a vector of `dim` raw values.
class StateWindow {
 public:
  StateWindow(std::size_t history, std::size_t dim, std::vector<double> scale);
  void push(std::span<const double> state);
  std::size_t length() const { return entries_.size(); }
  std::size_t dim() const { return dim_; }
  const std::deque<std::vector<double>>& entries() const { return entries_; }
  const std::vector<double>& scale() const { return scale_; }

 private:
  std::size_t dim_;
  std::vector<double> scale_;
  std::deque<std::vector<double>> entries_;  // oldest first; zeros before warm-up
};

struct EncodeInfo {
  std::size_t entries = 0;    // before padding or truncation
  std::size_t truncated = 0;  // oldest entries dropped to fit 36
};

/// Chronological flatten, divide by the per-component scale, clamp to [0,1], zero-pad to 36,
/// row-major fill. Oldest entries are dropped when there are more than 36.
Plane encode_state(const StateWindow& window, EncodeInfo* info = nullptr);

struct Experience {
  Plane state{};
  std::vector<std::uint32_t> actions;  // one per head
  std::vector<double> rewards;         // one per head
  Plane next{};
};

class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);
  void push(Experience e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const Experience& operator[](std::size_t i) const { return items_[i]; }  // 0 = oldest
  const Experience& sample(Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Experience> items_;
};

/// Index of the largest value, lowest index on ties.
std::size_t argmax(std::span<const double> q);

/// Greedy with probability epsilon, otherwise uniform over every level.
std::size_t select_action(std::span<const double> q, double epsilon, Rng& rng);

enum class Optimizer : std::uint8_t { sgd, adam };

struct TrainParams {
  double discount = 0.8;
  std::size_t updates = 4;
  double learning_rate = 1e-3;
  std::size_t batch_size = 1;
  Optimizer optimizer = Optimizer::sgd;
};

/// Moment estimates for the adaptive step (beta1 0.9, beta2 0.999).
struct AdamState {
  std::vector<double> m, v;
  std::uint64_t t = 0;
};

/// `updates` gradient steps on sampled mini-batches; targets come from `target` (the
/// previous-slot weights). Plain SGD unless p.optimizer is adam, which needs `adam`.
/// Returns the mean loss over the steps.
double train_step(QNetwork& net, const QNetwork& target, const ReplayMemory& memory, const TrainParams& p, Rng& rng,
                  AdamState* adam = nullptr);

struct AgentParams {
  double epsilon = 0.92;          // probability of the greedy action
  std::size_t random_slots = 11;  // A: random actions while slot <= A
  std::size_t memory = 1000;
  TrainParams train;
  OutputActivation output = OutputActivation::linear;
  double reward_scale = 1.0;      // rewards are multiplied by this before storage
  double tabular_learning_rate = 0.0;  // 0 selects 1/visits

  void check() const;
};

struct Decision {
  std::vector<std::uint32_t> actions;  // executed
  std::vector<std::uint32_t> greedy;   // argmax of the current estimate
};

/// Algorithms 1 and 2 with the CNN estimator. Slot loop:
///   decide(observation) then reward(per-head payoffs).
class DqnAgent {
 public:
  DqnAgent(std::size_t heads, std::size_t actions, std::vector<double> state_scale, const AgentParams& params,
           std::uint64_t seed);

  Decision decide(std::span<const double> observation);
  void reward(std::span<const double> rewards);

  std::size_t slot() const { return slot_; }
  const QNetwork& network() const { return net_; }
  QNetwork& network() { return net_; }
  const ReplayMemory& memory() const { return memory_; }
  std::size_t truncations() const { return truncations_; }
  double last_loss() const { return last_loss_; }

 private:
  AgentParams p_;
  std::size_t heads_, actions_;
  QNetwork net_;
  StateWindow window_;
  ReplayMemory memory_;
  Rng rng_;
  std::size_t slot_ = 0;
  std::optional<Experience> pending_;
  AdamState adam_;
  bool pending_rewarded_ = false;
  std::size_t truncations_ = 0;
  double last_loss_ = 0.0;
};

/// Tabular Q with state = opponent's last action level, one table per head.
class TabularAgent {
 public:
  TabularAgent(std::size_t heads, std::size_t states, std::size_t actions, const AgentParams& params,
               std::uint64_t seed);

  Decision decide(std::span<const std::uint32_t> state_levels);
  void reward(std::span<const double> rewards);

  double q(std::size_t head, std::size_t state, std::size_t action) const;
  std::size_t states() const { return states_; }
  std::size_t actions() const { return actions_; }

 private:
  AgentParams p_;
  std::size_t heads_, states_, actions_;
  std::vector<double> table_;
  std::vector<std::uint64_t> visits_;
  Rng rng_;
  std::size_t slot_ = 0;
  std::vector<std::uint32_t> pending_state_, pending_action_;
  std::vector<double> pending_reward_;
  bool has_pending_ = false;
};

}  // namespace rescuesim::learning
