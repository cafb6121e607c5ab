#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rescuesim/crypto/signature.hpp"
#include "rescuesim/ledger/codec.hpp"

namespace rescuesim::ledger {

enum class VoteType : std::uint8_t { prevote = 1, precommit = 2 };

const char* to_string(VoteType t);

/// Canonical bytes a validator signs for a vote. `value` is kZeroDigest for nil.
Bytes vote_sign_bytes(VoteType type, Height height, Round round, const crypto::Digest& value);

struct Vote {
  VoteType type = VoteType::prevote;
  Height height = 0;
  Round round = 0;
  crypto::Digest value{};  // block hash or nil
  NodeId voter = 0;
  crypto::Signature signature;

  bool is_nil() const { return value == crypto::kZeroDigest; }
  Bytes sign_bytes() const { return vote_sign_bytes(type, height, round, value); }
  friend bool operator==(const Vote&, const Vote&) = default;
};

void encode_vote(ByteWriter& w, const Vote& v);
Vote decode_vote(ByteReader& r);
std::size_t vote_wire_size();

/// Returns the public key of a committee member, or nullopt for non-members.
using KeyLookup = std::function<std::optional<crypto::PublicKey>(NodeId)>;

/// Counts signature checks so energy proxies can charge for them.
struct VerifyCounter {
  std::uint64_t signatures = 0;
};

/// Quorum certificate: more than floor(2Z/3) votes of one type for one block at one round.
/// Precommit certificates commit a block; prevote certificates are proofs of lock (PoL).
/// Aggregated mode carries one combined signature; naive mode carries every signature.
struct CommitCert {
  VoteType type = VoteType::precommit;
  Height height = 0;
  Round round = 0;
  crypto::Digest block_hash{};
  std::vector<NodeId> signers;  // strictly ascending
  bool aggregated = true;
  crypto::Signature aggregate;
  std::vector<crypto::Signature> individual;  // same order as signers

  bool empty() const { return signers.empty(); }
  friend bool operator==(const CommitCert&, const CommitCert&) = default;
};

/// Smallest count that is strictly greater than floor(2Z/3).
std::size_t quorum_threshold(std::size_t committee_size);
bool exceeds_quorum(std::size_t count, std::size_t committee_size);

/// Builds a certificate from votes of one type for the same (h, r, value). Votes are
/// sorted and deduplicated by voter; throws std::domain_error on mixed votes.
CommitCert make_commit_cert(std::vector<Vote> votes, const KeyLookup& keys, bool aggregated,
                            const crypto::SignatureScheme& scheme = crypto::default_scheme());

enum class CertVerdict { valid, empty, unsorted_signers, unknown_signer, below_quorum, bad_signature, nil_value };
const char* to_string(CertVerdict v);

CertVerdict verify_commit_cert(const CommitCert& cert, const KeyLookup& keys, std::size_t committee_size,
                               const crypto::SignatureScheme& scheme = crypto::default_scheme(),
                               VerifyCounter* counter = nullptr);

void encode_commit_cert(ByteWriter& w, const CommitCert& c);
CommitCert decode_commit_cert(ByteReader& r);

}  // namespace rescuesim::ledger
