#include "rescuesim/consensus/tally.hpp"

#include <string>

namespace rescuesim::consensus {

namespace {

TallyResult decide(const std::map<crypto::Digest, std::size_t>& counts, std::size_t committee_size) {
  TallyResult res;
  for (const auto& [value, n] : counts) {
    if (!ledger::exceeds_quorum(n, committee_size)) continue;
    if (res.kind != TallyResult::Kind::none) {
      throw InvariantViolation("two values exceed the vote quorum in one round (committee size " +
                               std::to_string(committee_size) + ")");
    }
    res.kind = value == crypto::kZeroDigest ? TallyResult::Kind::nil : TallyResult::Kind::block;
    res.value = value;
    res.count = n;
  }
  return res;
}

}  // namespace

TallyResult tally(std::span<const Vote> votes, std::size_t committee_size) {
  std::map<crypto::Digest, std::size_t> counts;
  for (const auto& v : votes) ++counts[v.value];
  return decide(counts, committee_size);
}

VoteSet::AddResult VoteSet::add(const Vote& v, Vote* existing) {
  auto [it, inserted] = by_voter_.try_emplace(v.voter, v);
  if (inserted) {
    ++counts_[v.value];
    return AddResult::added;
  }
  if (it->second.value == v.value) return AddResult::duplicate;
  if (existing) *existing = it->second;
  return AddResult::conflicting;
}

std::size_t VoteSet::count(const crypto::Digest& value) const {
  auto it = counts_.find(value);
  return it == counts_.end() ? 0 : it->second;
}

TallyResult VoteSet::result(std::size_t committee_size) const { return decide(counts_, committee_size); }

std::vector<Vote> VoteSet::votes_for(const crypto::Digest& value) const {
  std::vector<Vote> out;
  for (const auto& [id, v] : by_voter_) {
    if (v.value == value) out.push_back(v);
  }
  return out;
}

}  // namespace rescuesim::consensus
