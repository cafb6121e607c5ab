#include "rescuesim/consensus/messages.hpp"

#include "rescuesim/ledger/wire.hpp"

namespace rescuesim::consensus {

namespace {

using ledger::ByteReader;
using ledger::ByteWriter;

void put_proposal_body(ByteWriter& w, const Proposal& p) {
  w.put_u64(p.height);
  w.put_u32(p.round);
  w.put_u32(p.proposer);
  ledger::put_digest(w, p.block_hash);
  ledger::put_digest(w, p.parts_root);
  w.put_u32(p.part_count);
  w.put_bool(p.pol.has_value());
  if (p.pol) ledger::encode_commit_cert(w, *p.pol);
}

void put_proof(ByteWriter& w, const crypto::MerkleProof& proof) {
  w.put_u64(proof.index);
  w.put_u32(static_cast<std::uint32_t>(proof.path.size()));
  for (const auto& s : proof.path) {
    ledger::put_digest(w, s.sibling);
    w.put_bool(s.sibling_on_left);
  }
}

struct SizeVisitor {
  ByteWriter& w;
  void operator()(const Proposal& p) const { encode_proposal(w, p); }
  void operator()(const Vote& v) const { ledger::encode_vote(w, v); }
  void operator()(const BlockPart& b) const {
    w.put_u64(b.height);
    w.put_u32(b.round);
    ledger::put_digest(w, b.parts_root);
    w.put_u32(b.chunk.index);
    w.put_u32(b.chunk.total);
    w.put_bytes(b.chunk.data);
    put_proof(w, b.chunk.proof);
  }
  void operator()(const Decision& d) const {
    ledger::Block header_only;
    header_only.header = d.header;
    ledger::encode_block(w, header_only);
    ledger::encode_commit_cert(w, d.cert);
  }
  void operator()(const CatchUpRequest& c) const { w.put_u64(c.from); }
};

}  // namespace

const char* to_string(MsgKind k) {
  switch (k) {
    case MsgKind::proposal: return "proposal";
    case MsgKind::vote: return "vote";
    case MsgKind::block_part: return "block_part";
    case MsgKind::decision: return "decision";
    case MsgKind::catch_up: return "catch_up";
  }
  return "?";
}

Bytes Proposal::sign_bytes() const {
  ByteWriter w;
  w.put_string("rescuesim/proposal");
  put_proposal_body(w, *this);
  return std::move(w).bytes();
}

void encode_proposal(ByteWriter& w, const Proposal& p) {
  put_proposal_body(w, p);
  ledger::put_signature(w, p.signature);
}

Proposal decode_proposal(ByteReader& r) {
  Proposal p;
  p.height = r.get_u64();
  p.round = r.get_u32();
  p.proposer = r.get_u32();
  p.block_hash = ledger::get_digest(r);
  p.parts_root = ledger::get_digest(r);
  p.part_count = r.get_u32();
  if (r.get_bool()) p.pol = ledger::decode_commit_cert(r);
  p.signature = ledger::get_signature(r);
  return p;
}

Bytes encode_payload(const Payload& p) {
  ByteWriter w;
  w.put_u8(static_cast<std::uint8_t>(p.index()));
  std::visit(SizeVisitor{w}, p);
  return std::move(w).bytes();
}

std::size_t payload_wire_size(const Payload& p) {
  // Block parts dominate traffic; size them without copying the chunk twice.
  if (const auto* b = std::get_if<BlockPart>(&p)) {
    return 1 + 8 + 4 + 32 + 4 + 4 + 4 + b->chunk.data.size() + 8 + 4 + b->chunk.proof.path.size() * 33;
  }
  return encode_payload(p).size();
}

MsgKind Message::kind() const { return static_cast<MsgKind>(payload->index()); }

Height Message::height() const {
  return std::visit(
      [](const auto& p) -> Height {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Decision>) {
          return p.header.height;
        } else if constexpr (std::is_same_v<T, CatchUpRequest>) {
          return p.from;
        } else {
          return p.height;
        }
      },
      *payload);
}

Round Message::round() const {
  return std::visit(
      [](const auto& p) -> Round {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Decision>) {
          return p.cert.round;
        } else if constexpr (std::is_same_v<T, CatchUpRequest>) {
          return 0;
        } else {
          return p.round;
        }
      },
      *payload);
}

Message make_message(NodeId sender, Payload p) {
  Message m;
  m.sender = sender;
  m.wire_bytes = payload_wire_size(p);
  m.payload = std::make_shared<const Payload>(std::move(p));
  return m;
}

Proposal make_proposal(Height h, Round r, const crypto::KeyPair& proposer, const crypto::Digest& block_hash,
                       const ledger::ChunkedBlock& chunks, std::optional<ledger::CommitCert> pol,
                       const crypto::SignatureScheme& scheme) {
  Proposal p;
  p.height = h;
  p.round = r;
  p.proposer = proposer.owner;
  p.block_hash = block_hash;
  p.parts_root = chunks.root;
  p.part_count = static_cast<std::uint32_t>(chunks.chunks.size());
  p.pol = std::move(pol);
  p.signature = scheme.sign(p.sign_bytes(), proposer.sk);
  return p;
}

Vote make_vote(VoteType type, Height h, Round r, const crypto::Digest& value, const crypto::KeyPair& voter,
               const crypto::SignatureScheme& scheme) {
  Vote v;
  v.type = type;
  v.height = h;
  v.round = r;
  v.value = value;
  v.voter = voter.owner;
  v.signature = scheme.sign(v.sign_bytes(), voter.sk);
  return v;
}

}  // namespace rescuesim::consensus
