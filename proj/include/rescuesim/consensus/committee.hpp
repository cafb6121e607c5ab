#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "rescuesim/rng.hpp"
#include "rescuesim/types.hpp"

namespace rescuesim::consensus {

struct Committee {
  std::vector<NodeId> validators;  // ranked, size Z
  std::vector<NodeId> level1;      // first Psi of validators
  std::map<NodeId, double> power;  // normalized reputation stake
  std::map<NodeId, double> votes_received;

  std::size_t size() const { return validators.size(); }
  bool contains(NodeId id) const;
  bool is_level1(NodeId id) const;
  /// Largest tolerated number of Byzantine members, floor((Z-1)/3).
  std::size_t max_faulty() const { return validators.empty() ? 0 : (validators.size() - 1) / 3; }
};

struct Candidate {
  NodeId id = 0;
  double raw = 0.0;         // raw reputation
  double normalized = 0.5;  // sigmoid(raw): this voter's weight
  std::optional<NodeId> forced_vote;  // colluding voters vote a designated delegate
};

struct ElectionConfig {
  std::size_t committee_size = 10;  // Z
  std::size_t level1_size = 7;      // Psi
  /// Each voter inspects this many random other candidates and votes for the
  /// one with the highest reputation.
  std::size_t sample_size = 3;
};

/// Weighted delegate election. Throws ConfigError when fewer than Z candidates
/// are available or Psi > Z.
Committee elect_validators(std::span<const Candidate> candidates, const ElectionConfig& cfg, Rng& rng);

/// Fixed committee in the given order (naive Tendermint baseline).
Committee static_committee(std::vector<NodeId> ids, std::size_t level1_size);

/// Level-1 member at index (h + r) mod Psi.
NodeId leader_for(Height h, Round r, const Committee& c);

}  // namespace rescuesim::consensus
