#pragma once

// Binary Merkle tree with domain-separated leaf/node hashing and
// duplicate-last padding on odd levels.

#include <span>
#include <vector>

#include "rescuesim/crypto/hash.hpp"

namespace rescuesim::crypto {

Digest merkle_leaf_hash(std::span<const std::uint8_t> leaf);
Digest merkle_node_hash(const Digest& left, const Digest& right);

struct MerkleStep {
  Digest sibling;
  bool sibling_on_left = false;
};

struct MerkleProof {
  std::uint64_t index = 0;
  std::vector<MerkleStep> path;
};

class MerkleTree {
 public:
  /// Throws std::domain_error on an empty leaf set.
  explicit MerkleTree(std::span<const Bytes> leaves);
  explicit MerkleTree(std::vector<Digest> leaf_hashes);

  const Digest& root() const { return levels_.back().front(); }
  std::size_t leaf_count() const { return levels_.front().size(); }
  MerkleProof proof(std::size_t index) const;

 private:
  void build();
  std::vector<std::vector<Digest>> levels_;
};

Digest merkle_root(std::span<const Bytes> leaves);

bool merkle_verify(std::span<const std::uint8_t> leaf, const MerkleProof& proof, const Digest& root);
bool merkle_verify_hash(const Digest& leaf_hash, const MerkleProof& proof, const Digest& root);

}  // namespace rescuesim::crypto
