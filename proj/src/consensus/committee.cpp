#include "rescuesim/consensus/committee.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace rescuesim::consensus {

bool Committee::contains(NodeId id) const {
  return std::find(validators.begin(), validators.end(), id) != validators.end();
}

bool Committee::is_level1(NodeId id) const { return std::find(level1.begin(), level1.end(), id) != level1.end(); }

Committee elect_validators(std::span<const Candidate> candidates, const ElectionConfig& cfg, Rng& rng) {
  const std::size_t n = candidates.size();
  if (cfg.committee_size == 0 || n < cfg.committee_size) {
    throw ConfigError("election needs at least Z=" + std::to_string(cfg.committee_size) + " candidates, got " +
                      std::to_string(n));
  }
  if (cfg.level1_size == 0 || cfg.level1_size > cfg.committee_size) {
    throw ConfigError("election needs 0 < Psi <= Z");
  }

  std::vector<Candidate> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end(), [](const Candidate& a, const Candidate& b) { return a.id < b.id; });
  std::map<NodeId, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[sorted[i].id] = i;

  std::vector<double> received(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto& voter = sorted[v];
    std::size_t target = v;
    if (voter.forced_vote && index.count(*voter.forced_vote)) {
      target = index[*voter.forced_vote];
    } else if (n > 1) {
      std::vector<std::size_t> others;
      others.reserve(n - 1);
      for (std::size_t i = 0; i < n; ++i) {
        if (i != v) others.push_back(i);
      }
      const std::size_t k = std::min(std::max<std::size_t>(cfg.sample_size, 1), others.size());
      // Partial Fisher-Yates: first k entries become the sample.
      for (std::size_t i = 0; i < k; ++i) {
        std::swap(others[i], others[i + rng.below(others.size() - i)]);
      }
      target = others[0];
      for (std::size_t i = 1; i < k; ++i) {
        const auto& c = sorted[others[i]];
        const auto& best = sorted[target];
        if (c.raw > best.raw || (c.raw == best.raw && c.id < best.id)) target = others[i];
      }
    }
    received[target] += voter.normalized;
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (received[a] != received[b]) return received[a] > received[b];
    if (sorted[a].raw != sorted[b].raw) return sorted[a].raw > sorted[b].raw;
    return sorted[a].id < sorted[b].id;
  });

  Committee c;
  for (std::size_t i = 0; i < cfg.committee_size; ++i) {
    const auto& cand = sorted[order[i]];
    c.validators.push_back(cand.id);
    c.power[cand.id] = cand.normalized;
    c.votes_received[cand.id] = received[order[i]];
  }
  c.level1.assign(c.validators.begin(), c.validators.begin() + static_cast<std::ptrdiff_t>(cfg.level1_size));
  return c;
}

Committee static_committee(std::vector<NodeId> ids, std::size_t level1_size) {
  if (ids.empty() || level1_size == 0 || level1_size > ids.size()) {
    throw ConfigError("static committee needs 0 < Psi <= Z");
  }
  Committee c;
  c.validators = std::move(ids);
  c.level1.assign(c.validators.begin(), c.validators.begin() + static_cast<std::ptrdiff_t>(level1_size));
  for (NodeId id : c.validators) {
    c.power[id] = 1.0;
    c.votes_received[id] = 0.0;
  }
  return c;
}

NodeId leader_for(Height h, Round r, const Committee& c) {
  if (c.level1.empty()) throw std::domain_error("leader_for: empty committee");
  return c.level1[static_cast<std::size_t>((h + r) % c.level1.size())];
}

}  // namespace rescuesim::consensus
