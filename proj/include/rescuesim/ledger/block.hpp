#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rescuesim/crypto/signature.hpp"
#include "rescuesim/ledger/transaction.hpp"
#include "rescuesim/ledger/vote.hpp"

namespace rescuesim::ledger {

constexpr std::uint8_t kBlockVersion = 0x01;

/// Forensic script carried by block h+1 about height h.
struct LastProof {
  CommitCert last_commit;
  crypto::Digest votes_root{};     // T3 root over LastVotes
  crypto::Digest votes_pointer{};  // store pointer to the encoded LastVotes
  friend bool operator==(const LastProof&, const LastProof&) = default;
};

struct BlockHeader {
  std::uint8_t version = kBlockVersion;
  crypto::Digest prev_hash{};
  crypto::Digest this_hash{};
  crypto::Digest tx_root{};  // T1
  Height height = 0;
  Round round = 0;  // round in which the block was created
  NodeId proposer = 0;
  crypto::Signature proposer_signature;
  LastProof last_proof;
  friend bool operator==(const BlockHeader&, const BlockHeader&) = default;
};

struct Block {
  BlockHeader header;
  std::vector<Transaction> txs;
  friend bool operator==(const Block&, const Block&) = default;
};

/// Hash over every header field except this_hash and the proposer signature.
crypto::Digest compute_header_hash(const BlockHeader& h);

/// T1 root; an empty body hashes a fixed sentinel leaf.
crypto::Digest compute_tx_root(std::span<const Transaction> txs);

void encode_block(ByteWriter& w, const Block& b);
Bytes encode_block(const Block& b);
Block decode_block(std::span<const std::uint8_t> bytes);

/// Genesis parent hash shared by every node.
crypto::Digest genesis_hash();

class BlockAssemblyError : public std::runtime_error {
 public:
  BlockAssemblyError(std::size_t index, TxVerdict verdict);
  std::size_t index() const { return index_; }
  TxVerdict verdict() const { return verdict_; }

 private:
  std::size_t index_;
  TxVerdict verdict_;
};

/// Packages txs into a signed block. Every tx is checked first; the first
/// invalid one is reported through BlockAssemblyError.
Block assemble_block(std::vector<Transaction> txs, const crypto::Digest& parent_hash, Height height, Round round,
                     const crypto::KeyPair& proposer, LastProof last_proof, const TxRules& rules,
                     const crypto::SignatureScheme& scheme = crypto::default_scheme(), bool check_txs = true);

enum class BlockVerdict {
  valid,
  bad_version,
  bad_parent,
  bad_height,
  bad_round,
  bad_hash,
  bad_tx_root,
  wrong_proposer,
  bad_proposer_signature,
  bad_last_commit,
  last_commit_quorum,
  bad_transaction,
};

const char* to_string(BlockVerdict v);

struct BlockContext {
  crypto::Digest parent_hash{};
  Height parent_height = 0;
  Round current_round = 0;
  /// Designated leader for (height, r).
  std::function<NodeId(Round)> leader_at;
  /// Keys of the committee validating this height (proposer signature).
  KeyLookup proposer_keys;
  /// Keys and size of the committee that committed the parent (LastCommit).
  KeyLookup last_commit_keys;
  std::size_t last_committee_size = 0;
  TxRules tx_rules;
  /// Optional replacement for verify_transaction (e.g. a verification cache).
  std::function<TxVerdict(const Transaction&)> tx_check;
  /// Optional memoized replacement for the context-free body rules (T1 root and
  /// transactions); must return valid, bad_tx_root or bad_transaction.
  std::function<BlockVerdict(const Block&)> body_verdict;
  VerifyCounter* counter = nullptr;
};

/// Runs the block rules in order and names the first one that fails.
/// Context-free body rules: T1 root, then every transaction.
BlockVerdict validate_body(const Block& b, const TxRules& rules,
                           const crypto::SignatureScheme& scheme = crypto::default_scheme());

BlockVerdict validate_block(const Block& b, const BlockContext& ctx,
                            const crypto::SignatureScheme& scheme = crypto::default_scheme());

}  // namespace rescuesim::ledger
