#pragma once

// Forensic detectors over archived consensus messages. All functions are pure.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rescuesim/consensus/messages.hpp"
#include "rescuesim/reputation/reputation.hpp"

namespace rescuesim::reputation {

using consensus::Proposal;
using ledger::Vote;

enum class EvidenceKind : std::uint8_t { cp = 1, cv = 2, wbc = 3, nbc = 4, vol = 5 };
const char* to_string(EvidenceKind k);
Behavior behavior_of(EvidenceKind k);

/// Accusation plus the signed messages backing it, in canonical encoding.
/// cp: two proposals. cv: two votes. wbc: the proposal plus the verdict code.
/// nbc: nothing. vol: the accused's votes that break the locking rules.
struct Evidence {
  EvidenceKind kind = EvidenceKind::cp;
  NodeId accused = 0;
  Height height = 0;
  Round round = 0;
  std::vector<Proposal> proposals;
  std::vector<Vote> votes;
  std::uint8_t verdict = 0;  // ledger::BlockVerdict for wbc

  crypto::Digest digest() const;
  friend bool operator==(const Evidence&, const Evidence&) = default;
};

Bytes encode_evidence(const Evidence& e);
/// Throws ledger::DecodeError on malformed input.
Evidence decode_evidence(std::span<const std::uint8_t> bytes);

struct EvidenceContext {
  ledger::KeyLookup keys;  // committee keys of the evidence height
  std::function<NodeId(Height, Round)> leader_at;
  std::size_t max_faulty = 0;  // f of the evidence height
  const crypto::SignatureScheme* scheme = &crypto::default_scheme();
};

/// cp and cv are self-certifying. wbc, nbc and vol rest on absence or local
/// validation, so they also need more than f informers to vouch for them.
bool verify_evidence(const Evidence& e, const EvidenceContext& ctx, std::size_t informer_count);

/// Two distinct signed proposals from one proposer, or two distinct signed votes of
/// one type from one voter, at the same (h, r). Messages with bad signatures are skipped.
std::vector<Evidence> detect_equivocation(std::span<const consensus::Message> archive, const ledger::KeyLookup& keys,
                                          const crypto::SignatureScheme& scheme = crypto::default_scheme());

/// What one observer saw of a designated leader's slot.
struct ProposalObservation {
  Height height = 0;
  Round round = 0;
  NodeId leader = 0;
  std::optional<Proposal> proposal;
  std::optional<ledger::BlockVerdict> verdict;
  bool timed_out = false;  // propose timeout fired with no proposal
};

std::vector<Evidence> detect_block_faults(std::span<const ProposalObservation> stream);

struct LockAnalysis {
  std::vector<Evidence> evidence;
  bool partial = false;
};

/// Stitches the votes of one height and checks every validator's prevotes against its
/// latest earlier precommit, and every non-nil precommit against a prevote quorum in
/// its round. PoL certificates carried by proposals count as quorums. An incomplete
/// archive yields a partial analysis with no accusations.
LockAnalysis detect_lock_violation(Height h, std::span<const Vote> votes, std::span<const ledger::CommitCert> pols,
                                   std::size_t committee_size, bool complete, const ledger::KeyLookup& keys,
                                   const crypto::SignatureScheme& scheme = crypto::default_scheme());

}  // namespace rescuesim::reputation
