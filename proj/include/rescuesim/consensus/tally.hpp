#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "rescuesim/consensus/messages.hpp"

namespace rescuesim::consensus {

struct TallyResult {
  enum class Kind { none, block, nil };
  Kind kind = Kind::none;
  crypto::Digest value{};
  std::size_t count = 0;
};

/// Decides whether one value exceeds floor(2Z/3) among votes already deduplicated
/// per validator. Two values above quorum falsify the fault model and raise
/// InvariantViolation.
TallyResult tally(std::span<const Vote> votes, std::size_t committee_size);

/// Votes of one (h, r, type); the first vote per validator counts.
class VoteSet {
 public:
  enum class AddResult { added, duplicate, conflicting };

  /// On conflict, `existing` (when given) receives the vote already held for that voter.
  AddResult add(const Vote& v, Vote* existing = nullptr);

  std::size_t total() const { return by_voter_.size(); }
  std::size_t count(const crypto::Digest& value) const;
  TallyResult result(std::size_t committee_size) const;
  std::vector<Vote> votes_for(const crypto::Digest& value) const;
  const std::map<NodeId, Vote>& votes() const { return by_voter_; }

 private:
  std::map<NodeId, Vote> by_voter_;
  std::map<crypto::Digest, std::size_t> counts_;
};

}  // namespace rescuesim::consensus
