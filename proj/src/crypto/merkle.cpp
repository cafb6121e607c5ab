#include "rescuesim/crypto/merkle.hpp"

#include <stdexcept>

namespace rescuesim::crypto {

Digest merkle_leaf_hash(std::span<const std::uint8_t> leaf) {
  Bytes buf;
  buf.reserve(leaf.size() + 1);
  buf.push_back(0x00);
  buf.insert(buf.end(), leaf.begin(), leaf.end());
  return sha256(buf);
}

Digest merkle_node_hash(const Digest& left, const Digest& right) {
  std::array<std::uint8_t, 65> buf;
  buf[0] = 0x01;
  std::copy(left.begin(), left.end(), buf.begin() + 1);
  std::copy(right.begin(), right.end(), buf.begin() + 33);
  return sha256(buf);
}

MerkleTree::MerkleTree(std::span<const Bytes> leaves) {
  if (leaves.empty()) throw std::domain_error("merkle tree needs at least one leaf");
  std::vector<Digest> hashes;
  hashes.reserve(leaves.size());
  for (const auto& leaf : leaves) hashes.push_back(merkle_leaf_hash(leaf));
  levels_.push_back(std::move(hashes));
  build();
}

MerkleTree::MerkleTree(std::vector<Digest> leaf_hashes) {
  if (leaf_hashes.empty()) throw std::domain_error("merkle tree needs at least one leaf");
  levels_.push_back(std::move(leaf_hashes));
  build();
}

void MerkleTree::build() {
  while (levels_.back().size() > 1) {
    const auto& below = levels_.back();
    std::vector<Digest> above;
    above.reserve((below.size() + 1) / 2);
    for (std::size_t i = 0; i < below.size(); i += 2) {
      const Digest& left = below[i];
      const Digest& right = i + 1 < below.size() ? below[i + 1] : below[i];
      above.push_back(merkle_node_hash(left, right));
    }
    levels_.push_back(std::move(above));
  }
}

MerkleProof MerkleTree::proof(std::size_t index) const {
  if (index >= leaf_count()) throw std::out_of_range("merkle proof index out of range");
  MerkleProof p;
  p.index = index;
  std::size_t pos = index;
  for (std::size_t level = 0; level + 1 < levels_.size(); ++level) {
    const auto& nodes = levels_[level];
    const bool is_right = (pos % 2) == 1;
    const std::size_t sibling = is_right ? pos - 1 : std::min(pos + 1, nodes.size() - 1);
    p.path.push_back(MerkleStep{nodes[sibling], is_right});
    pos /= 2;
  }
  return p;
}

Digest merkle_root(std::span<const Bytes> leaves) { return MerkleTree(leaves).root(); }

bool merkle_verify_hash(const Digest& leaf_hash, const MerkleProof& proof, const Digest& root) {
  Digest acc = leaf_hash;
  std::uint64_t pos = proof.index;
  for (const auto& step : proof.path) {
    // The claimed side must agree with the index bit, otherwise a proof could
    // be replayed for a different position.
    if (step.sibling_on_left != ((pos % 2) == 1)) return false;
    acc = step.sibling_on_left ? merkle_node_hash(step.sibling, acc) : merkle_node_hash(acc, step.sibling);
    pos /= 2;
  }
  return pos == 0 && acc == root;
}

bool merkle_verify(std::span<const std::uint8_t> leaf, const MerkleProof& proof, const Digest& root) {
  return merkle_verify_hash(merkle_leaf_hash(leaf), proof, root);
}

}  // namespace rescuesim::crypto
