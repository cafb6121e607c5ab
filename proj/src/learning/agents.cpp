#include "rescuesim/learning/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rescuesim/types.hpp"

namespace rescuesim::learning {

ActionGrid::ActionGrid(std::size_t levels, double max) : levels_(levels), max_(max) {
  if (levels < 2) throw std::domain_error("action grid needs at least two levels");
  if (!(max > 0.0)) throw std::domain_error("action grid max must be positive");
}

double ActionGrid::value(std::size_t level) const {
  if (level >= levels_) throw std::domain_error("action level out of range");
  if (level == levels_ - 1) return max_;
  return static_cast<double>(level) * max_ / static_cast<double>(levels_ - 1);
}

std::size_t ActionGrid::nearest(double v) const {
  const double t = std::clamp(v, 0.0, max_) / max_ * static_cast<double>(levels_ - 1);
  const double lo = std::floor(t);
  auto level = static_cast<std::size_t>(lo);
  if (t - lo > 0.5) ++level;
  return std::min(level, levels_ - 1);
}

StateWindow::StateWindow(std::size_t history, std::size_t dim, std::vector<double> scale)
    : dim_(dim), scale_(std::move(scale)) {
  if (dim == 0) throw std::domain_error("state dimension must be positive");
  if (scale_.size() != dim) throw std::domain_error("one scale per state component");
  for (double s : scale_) {
    if (!(s > 0.0)) throw std::domain_error("state scale must be positive");
  }
  entries_.assign(history + 1, std::vector<double>(dim, 0.0));
}

void StateWindow::push(std::span<const double> state) {
  if (state.size() != dim_) throw std::domain_error("state vector has the wrong dimension");
  entries_.pop_front();
  entries_.emplace_back(state.begin(), state.end());
}

Plane encode_state(const StateWindow& window, EncodeInfo* info) {
  std::vector<double> flat;
  flat.reserve(window.length() * window.dim());
  for (const auto& e : window.entries()) {
    for (std::size_t k = 0; k < e.size(); ++k) flat.push_back(std::clamp(e[k] / window.scale()[k], 0.0, 1.0));
  }
  std::size_t skip = flat.size() > kPlaneSize ? flat.size() - kPlaneSize : 0;
  if (info) *info = EncodeInfo{flat.size(), skip};
  Plane plane{};
  std::copy(flat.begin() + static_cast<std::ptrdiff_t>(skip), flat.end(), plane.begin());
  return plane;
}

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::domain_error("replay memory capacity must be positive");
}

void ReplayMemory::push(Experience e) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(e));
}

const Experience& ReplayMemory::sample(Rng& rng) const {
  if (items_.empty()) throw std::domain_error("sampling from an empty replay memory");
  return items_[rng.below(items_.size())];
}

std::size_t argmax(std::span<const double> q) {
  if (q.empty()) throw std::domain_error("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] > q[best]) best = i;
  }
  return best;
}

std::size_t select_action(std::span<const double> q, double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) throw std::domain_error("epsilon must lie in [0,1]");
  if (rng.bernoulli(epsilon)) return argmax(q);
  return rng.below(q.size());
}

double train_step(QNetwork& net, const QNetwork& target, const ReplayMemory& memory, const TrainParams& p, Rng& rng,
                  AdamState* adam) {
  if (memory.empty()) throw std::domain_error("train_step needs a non-empty replay memory");
  if (p.optimizer == Optimizer::adam && !adam) throw std::domain_error("adam optimizer needs its state");
  const std::size_t a = net.actions();
  std::vector<double> grad(net.params().size(), 0.0);
  std::vector<QNetwork::Target> targets;
  double total = 0.0;
  for (std::size_t u = 0; u < p.updates; ++u) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t b = 0; b < p.batch_size; ++b) {
      const Experience& e = memory.sample(rng);
      const auto next_q = target.forward(e.next);
      targets.clear();
      for (std::size_t h = 0; h < e.actions.size(); ++h) {
        const std::span<const double> row(next_q.data() + h * a, a);
        const double best = row[argmax(row)];
        targets.push_back({h, e.actions[h], e.rewards[h] + p.discount * best});
      }
      loss += net.accumulate_gradient(e.state, targets, grad);
    }
    auto& w = net.params();
    const double inv_b = 1.0 / static_cast<double>(p.batch_size);
    if (p.optimizer == Optimizer::sgd) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= p.learning_rate * inv_b * grad[i];
    } else {
      constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
      if (adam->m.size() != w.size()) {
        adam->m.assign(w.size(), 0.0);
        adam->v.assign(w.size(), 0.0);
        adam->t = 0;
      }
      ++adam->t;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam->t));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam->t));
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double g = grad[i] * inv_b;
        adam->m[i] = b1 * adam->m[i] + (1.0 - b1) * g;
        adam->v[i] = b2 * adam->v[i] + (1.0 - b2) * g * g;
        // keep idle moments out of the subnormal range, which is very slow on x86
        if (std::abs(adam->m[i]) < 1e-200) adam->m[i] = 0.0;
        if (adam->v[i] < 1e-200) adam->v[i] = 0.0;
        w[i] -= p.learning_rate * (adam->m[i] / c1) / (std::sqrt(adam->v[i] / c2) + eps);
      }
    }
    total += loss / static_cast<double>(p.batch_size);
  }
  return p.updates ? total / static_cast<double>(p.updates) : 0.0;
}

void AgentParams::check() const {
  if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("epsilon must lie in [0,1]");
  if (memory == 0) throw ConfigError("replay memory must hold at least one experience");
  if (train.discount < 0.0 || train.discount >= 1.0) throw ConfigError("discount must lie in [0,1)");
  if (!(train.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (train.batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(reward_scale > 0.0)) throw ConfigError("reward scale must be positive");
  if (tabular_learning_rate < 0.0 || tabular_learning_rate > 1.0) {
    throw ConfigError("tabular learning rate must lie in [0,1] (0 = 1/visits)");
  }
}

DqnAgent::DqnAgent(std::size_t heads, std::size_t actions, std::vector<double> state_scale, const AgentParams& params,
                   std::uint64_t seed)
    : p_(params),
      heads_(heads),
      actions_(actions),
      net_(heads, actions, params.output),
      window_(params.random_slots, state_scale.size(), state_scale),
      memory_(params.memory),
      rng_(derive_seed(seed, "dqn-actions")) {
  p_.check();
  Rng init(derive_seed(seed, "dqn-init"));
  net_.initialize(init);
}

Decision DqnAgent::decide(std::span<const double> observation) {
  ++slot_;
  window_.push(observation);
  EncodeInfo info;
  const Plane plane = encode_state(window_, &info);
  if (info.truncated) ++truncations_;

  if (pending_) {
    if (!pending_rewarded_) throw std::logic_error("DqnAgent::decide called before reward for the previous slot");
    pending_->next = plane;
    memory_.push(std::move(*pending_));
    pending_.reset();
    const QNetwork target = net_;  // previous-slot weights
    last_loss_ = train_step(net_, target, memory_, p_.train, rng_, &adam_);
  }

  const auto q = net_.forward(plane);
  Decision d;
  for (std::size_t h = 0; h < heads_; ++h) {
    const std::span<const double> row(q.data() + h * actions_, actions_);
    const auto g = static_cast<std::uint32_t>(argmax(row));
    d.greedy.push_back(g);
    if (slot_ <= p_.random_slots) {
      d.actions.push_back(static_cast<std::uint32_t>(rng_.below(actions_)));
    } else {
      d.actions.push_back(static_cast<std::uint32_t>(select_action(row, p_.epsilon, rng_)));
    }
  }
  pending_ = Experience{plane, d.actions, {}, {}};
  pending_rewarded_ = false;
  return d;
}

void DqnAgent::reward(std::span<const double> rewards) {
  if (!pending_ || pending_rewarded_) throw std::logic_error("DqnAgent::reward without a pending decision");
  if (rewards.size() != heads_) throw std::domain_error("one reward per head");
  pending_->rewards.clear();
  for (double r : rewards) pending_->rewards.push_back(r * p_.reward_scale);
  pending_rewarded_ = true;
}

TabularAgent::TabularAgent(std::size_t heads, std::size_t states, std::size_t actions, const AgentParams& params,
                           std::uint64_t seed)
    : p_(params),
      heads_(heads),
      states_(states),
      actions_(actions),
      table_(heads * states * actions, 0.0),
      visits_(heads * states * actions, 0),
      rng_(derive_seed(seed, "tabular-actions")) {
  p_.check();
  if (heads == 0 || states == 0 || actions == 0) throw std::domain_error("tabular agent needs non-empty tables");
}

double TabularAgent::q(std::size_t head, std::size_t state, std::size_t action) const {
  return table_.at((head * states_ + state) * actions_ + action);
}

Decision TabularAgent::decide(std::span<const std::uint32_t> state_levels) {
  if (state_levels.size() != heads_) throw std::domain_error("one state level per head");
  ++slot_;
  if (has_pending_) {
    for (std::size_t h = 0; h < heads_; ++h) {
      const double* next = &table_[(h * states_ + state_levels[h]) * actions_];
      const double best = *std::max_element(next, next + actions_);
      const std::size_t idx = (h * states_ + pending_state_[h]) * actions_ + pending_action_[h];
      ++visits_[idx];
      const double lr = p_.tabular_learning_rate > 0.0 ? p_.tabular_learning_rate
                                                       : 1.0 / static_cast<double>(visits_[idx]);
      table_[idx] += lr * (pending_reward_[h] + p_.train.discount * best - table_[idx]);
    }
    has_pending_ = false;
  }
  Decision d;
  pending_state_.assign(state_levels.begin(), state_levels.end());
  for (std::size_t h = 0; h < heads_; ++h) {
    if (state_levels[h] >= states_) throw std::domain_error("state level out of range");
    const std::span<const double> row(&table_[(h * states_ + state_levels[h]) * actions_], actions_);
    const auto g = static_cast<std::uint32_t>(argmax(row));
    d.greedy.push_back(g);
    if (slot_ <= p_.random_slots) {
      d.actions.push_back(static_cast<std::uint32_t>(rng_.below(actions_)));
    } else {
      d.actions.push_back(static_cast<std::uint32_t>(select_action(row, p_.epsilon, rng_)));
    }
  }
  pending_action_ = d.actions;
  pending_reward_.clear();
  return d;
}

void TabularAgent::reward(std::span<const double> rewards) {
  if (rewards.size() != heads_) throw std::domain_error("one reward per head");
  pending_reward_.assign(rewards.begin(), rewards.end());
  has_pending_ = true;
}

}  // namespace rescuesim::learning
