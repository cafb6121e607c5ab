#pragma once

#include <memory>
#include <optional>
#include <variant>

#include "rescuesim/ledger/block.hpp"
#include "rescuesim/ledger/chunking.hpp"
#include "rescuesim/ledger/vote.hpp"

namespace rescuesim::consensus {

using ledger::Vote;
using ledger::VoteType;

struct Proposal {
  Height height = 0;
  Round round = 0;
  NodeId proposer = 0;
  crypto::Digest block_hash{};
  crypto::Digest parts_root{};  // T2 root
  std::uint32_t part_count = 0;
  /// Prevote quorum for block_hash at an earlier round when re-proposing a locked block.
  std::optional<ledger::CommitCert> pol;
  crypto::Signature signature;

  Bytes sign_bytes() const;
  friend bool operator==(const Proposal&, const Proposal&) = default;
};

struct BlockPart {
  Height height = 0;
  Round round = 0;
  crypto::Digest parts_root{};
  ledger::BlockChunk chunk;
};

/// A committed header with its certificate; lets lagging nodes and observers follow the chain.
struct Decision {
  ledger::BlockHeader header;
  ledger::CommitCert cert;
};

struct CatchUpRequest {
  Height from = 0;
};

using Payload = std::variant<Proposal, Vote, BlockPart, Decision, CatchUpRequest>;

enum class MsgKind : std::uint8_t { proposal, vote, block_part, decision, catch_up };
const char* to_string(MsgKind k);

struct Message {
  NodeId sender = 0;
  std::shared_ptr<const Payload> payload;
  std::size_t wire_bytes = 0;

  MsgKind kind() const;
  Height height() const;
  Round round() const;
  const Proposal* proposal() const { return std::get_if<Proposal>(payload.get()); }
  const Vote* vote() const { return std::get_if<Vote>(payload.get()); }
  const BlockPart* block_part() const { return std::get_if<BlockPart>(payload.get()); }
  const Decision* decision() const { return std::get_if<Decision>(payload.get()); }
  const CatchUpRequest* catch_up() const { return std::get_if<CatchUpRequest>(payload.get()); }
};

Message make_message(NodeId sender, Payload p);

void encode_proposal(ledger::ByteWriter& w, const Proposal& p);
Proposal decode_proposal(ledger::ByteReader& r);

/// Canonical encoding of any payload; its length is the message's wire size.
Bytes encode_payload(const Payload& p);
std::size_t payload_wire_size(const Payload& p);

Proposal make_proposal(Height h, Round r, const crypto::KeyPair& proposer, const crypto::Digest& block_hash,
                       const ledger::ChunkedBlock& chunks, std::optional<ledger::CommitCert> pol,
                       const crypto::SignatureScheme& scheme = crypto::default_scheme());

Vote make_vote(VoteType type, Height h, Round r, const crypto::Digest& value, const crypto::KeyPair& voter,
               const crypto::SignatureScheme& scheme = crypto::default_scheme());

}  // namespace rescuesim::consensus
