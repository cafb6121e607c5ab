#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "rescuesim/crypto/merkle.hpp"
#include "rescuesim/ledger/block.hpp"

namespace rescuesim::ledger {

struct BlockChunk {
  std::uint32_t index = 0;
  std::uint32_t total = 0;
  Bytes data;
  crypto::MerkleProof proof;  // inclusion in T2
};

struct ChunkedBlock {
  crypto::Digest root{};  // root_B of T2
  std::vector<BlockChunk> chunks;
  std::size_t encoded_size = 0;
};

ChunkedBlock chunk_block(const Block& b, std::size_t chunk_size);
ChunkedBlock chunk_bytes(const Bytes& encoded, std::size_t chunk_size);

bool verify_chunk(const BlockChunk& c, const crypto::Digest& root);

class ChunkRejected : public std::runtime_error {
 public:
  explicit ChunkRejected(std::uint32_t index);
  std::uint32_t index() const { return index_; }

 private:
  std::uint32_t index_;
};

/// Collects chunks in any order, rejecting those whose proof fails.
class ChunkAssembler {
 public:
  ChunkAssembler(const crypto::Digest& root, std::uint32_t total);

  enum class Result { accepted, duplicate, rejected };
  Result add(const BlockChunk& c);

  bool complete() const { return received_ == parts_.size(); }
  std::uint32_t received() const { return received_; }
  std::uint32_t total() const { return static_cast<std::uint32_t>(parts_.size()); }
  const crypto::Digest& root() const { return root_; }

  /// Concatenated bytes; only valid once complete().
  Bytes bytes() const;
  Block assemble() const;

 private:
  crypto::Digest root_;
  std::vector<std::optional<Bytes>> parts_;
  std::uint32_t received_ = 0;
};

/// Convenience over ChunkAssembler; throws ChunkRejected naming the first bad chunk.
Block reassemble(std::span<const BlockChunk> chunks, const crypto::Digest& root);

}  // namespace rescuesim::ledger
