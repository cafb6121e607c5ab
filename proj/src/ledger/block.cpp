#include "rescuesim/ledger/block.hpp"

#include <string>

#include "rescuesim/crypto/merkle.hpp"
#include "rescuesim/ledger/wire.hpp"

namespace rescuesim::ledger {

namespace {

void put_last_proof(ByteWriter& w, const LastProof& p) {
  encode_commit_cert(w, p.last_commit);
  put_digest(w, p.votes_root);
  put_digest(w, p.votes_pointer);
}

LastProof get_last_proof(ByteReader& r) {
  LastProof p;
  p.last_commit = decode_commit_cert(r);
  p.votes_root = get_digest(r);
  p.votes_pointer = get_digest(r);
  return p;
}

// Header fields covered by this_hash, in wire order.
void put_hashed_fields(ByteWriter& w, const BlockHeader& h) {
  w.put_u8(h.version);
  put_digest(w, h.prev_hash);
  put_digest(w, h.tx_root);
  w.put_u64(h.height);
  w.put_u32(h.round);
  w.put_u32(h.proposer);
  put_last_proof(w, h.last_proof);
}

}  // namespace

crypto::Digest compute_header_hash(const BlockHeader& h) {
  ByteWriter w;
  w.put_string("rescuesim/block-header");
  put_hashed_fields(w, h);
  return crypto::h0(w.bytes());
}

crypto::Digest compute_tx_root(std::span<const Transaction> txs) {
  if (txs.empty()) {
    static const Bytes sentinel = {'e', 'm', 'p', 't', 'y'};
    return crypto::MerkleTree(std::span<const Bytes>(&sentinel, 1)).root();
  }
  std::vector<crypto::Digest> leaves;
  leaves.reserve(txs.size());
  for (const auto& tx : txs) leaves.push_back(crypto::merkle_leaf_hash(encode_transaction(tx)));
  return crypto::MerkleTree(std::move(leaves)).root();
}

void encode_block(ByteWriter& w, const Block& b) {
  const auto& h = b.header;
  put_hashed_fields(w, h);
  put_digest(w, h.this_hash);
  put_signature(w, h.proposer_signature);
  w.put_u32(static_cast<std::uint32_t>(b.txs.size()));
  for (const auto& tx : b.txs) encode_transaction(w, tx);
}

Bytes encode_block(const Block& b) {
  ByteWriter w;
  encode_block(w, b);
  return std::move(w).bytes();
}

Block decode_block(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Block b;
  auto& h = b.header;
  h.version = r.get_u8();
  if (h.version != kBlockVersion) throw DecodeError("unsupported block version");
  h.prev_hash = get_digest(r);
  h.tx_root = get_digest(r);
  h.height = r.get_u64();
  h.round = r.get_u32();
  h.proposer = r.get_u32();
  h.last_proof = get_last_proof(r);
  h.this_hash = get_digest(r);
  h.proposer_signature = get_signature(r);
  const auto n = r.get_count(1);
  b.txs.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) b.txs.push_back(decode_transaction(r));
  r.expect_done();
  return b;
}

crypto::Digest genesis_hash() { return crypto::tagged_hash("rescuesim/genesis", {}); }

BlockAssemblyError::BlockAssemblyError(std::size_t index, TxVerdict verdict)
    : std::runtime_error("invalid transaction at index " + std::to_string(index) + ": " + to_string(verdict)),
      index_(index),
      verdict_(verdict) {}

Block assemble_block(std::vector<Transaction> txs, const crypto::Digest& parent_hash, Height height, Round round,
                     const crypto::KeyPair& proposer, LastProof last_proof, const TxRules& rules,
                     const crypto::SignatureScheme& scheme, bool check_txs) {
  if (check_txs) {
    for (std::size_t i = 0; i < txs.size(); ++i) {
      const auto v = verify_transaction(txs[i], rules, scheme);
      if (v != TxVerdict::valid) throw BlockAssemblyError(i, v);
    }
  }
  Block b;
  b.txs = std::move(txs);
  auto& h = b.header;
  h.prev_hash = parent_hash;
  h.tx_root = compute_tx_root(b.txs);
  h.height = height;
  h.round = round;
  h.proposer = proposer.owner;
  h.last_proof = std::move(last_proof);
  h.this_hash = compute_header_hash(h);
  h.proposer_signature = scheme.sign(h.this_hash, proposer.sk);
  return b;
}

const char* to_string(BlockVerdict v) {
  switch (v) {
    case BlockVerdict::valid: return "valid";
    case BlockVerdict::bad_version: return "bad_version";
    case BlockVerdict::bad_parent: return "bad_parent";
    case BlockVerdict::bad_height: return "bad_height";
    case BlockVerdict::bad_round: return "bad_round";
    case BlockVerdict::bad_hash: return "bad_hash";
    case BlockVerdict::bad_tx_root: return "bad_tx_root";
    case BlockVerdict::wrong_proposer: return "wrong_proposer";
    case BlockVerdict::bad_proposer_signature: return "bad_proposer_signature";
    case BlockVerdict::bad_last_commit: return "bad_last_commit";
    case BlockVerdict::last_commit_quorum: return "last_commit_quorum";
    case BlockVerdict::bad_transaction: return "bad_transaction";
  }
  return "?";
}

BlockVerdict validate_block(const Block& b, const BlockContext& ctx, const crypto::SignatureScheme& scheme) {
  const auto& h = b.header;
  if (h.version != kBlockVersion) return BlockVerdict::bad_version;
  if (h.prev_hash != ctx.parent_hash) return BlockVerdict::bad_parent;
  if (h.height != ctx.parent_height + 1) return BlockVerdict::bad_height;
  if (h.round > ctx.current_round) return BlockVerdict::bad_round;
  if (h.this_hash != compute_header_hash(h)) return BlockVerdict::bad_hash;
  if (!ctx.body_verdict && h.tx_root != compute_tx_root(b.txs)) return BlockVerdict::bad_tx_root;
  if (!ctx.leader_at || ctx.leader_at(h.round) != h.proposer) return BlockVerdict::wrong_proposer;
  auto pk = ctx.proposer_keys ? ctx.proposer_keys(h.proposer) : std::nullopt;
  if (!pk) return BlockVerdict::wrong_proposer;
  if (ctx.counter) ++ctx.counter->signatures;
  if (!scheme.verify(h.proposer_signature, h.this_hash, *pk)) return BlockVerdict::bad_proposer_signature;

  const auto& lc = h.last_proof.last_commit;
  if (h.height == 1) {
    if (!lc.empty()) return BlockVerdict::bad_last_commit;
  } else {
    if (lc.type != VoteType::precommit || lc.height != ctx.parent_height || lc.block_hash != ctx.parent_hash) return BlockVerdict::bad_last_commit;
    const auto cv = verify_commit_cert(lc, ctx.last_commit_keys, ctx.last_committee_size, scheme, ctx.counter);
    if (cv == CertVerdict::below_quorum || cv == CertVerdict::empty) return BlockVerdict::last_commit_quorum;
    if (cv != CertVerdict::valid) return BlockVerdict::bad_last_commit;
  }

  if (ctx.body_verdict) {
    if (ctx.counter) {
      for (const auto& tx : b.txs) ctx.counter->signatures += transaction_signature_checks(tx);
    }
    return ctx.body_verdict(b);
  }
  for (const auto& tx : b.txs) {
    if (ctx.counter) ctx.counter->signatures += transaction_signature_checks(tx);
    const auto v = ctx.tx_check ? ctx.tx_check(tx) : verify_transaction(tx, ctx.tx_rules, scheme);
    if (v != TxVerdict::valid) return BlockVerdict::bad_transaction;
  }
  return BlockVerdict::valid;
}

BlockVerdict validate_body(const Block& b, const TxRules& rules, const crypto::SignatureScheme& scheme) {
  if (b.header.tx_root != compute_tx_root(b.txs)) return BlockVerdict::bad_tx_root;
  for (const auto& tx : b.txs) {
    if (verify_transaction(tx, rules, scheme) != TxVerdict::valid) return BlockVerdict::bad_transaction;
  }
  return BlockVerdict::valid;
}

}  // namespace rescuesim::ledger
