#include "rescuesim/ledger/chunking.hpp"

#include <algorithm>
#include <string>

namespace rescuesim::ledger {

ChunkedBlock chunk_bytes(const Bytes& encoded, std::size_t chunk_size) {
  if (chunk_size == 0) throw std::domain_error("chunk_size must be positive");
  ChunkedBlock out;
  out.encoded_size = encoded.size();
  const std::size_t n = std::max<std::size_t>(1, (encoded.size() + chunk_size - 1) / chunk_size);
  std::vector<Bytes> parts;
  parts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t begin = i * chunk_size;
    const std::size_t end = std::min(encoded.size(), begin + chunk_size);
    parts.emplace_back(encoded.begin() + static_cast<std::ptrdiff_t>(begin),
                       encoded.begin() + static_cast<std::ptrdiff_t>(end));
  }
  crypto::MerkleTree tree(parts);
  out.root = tree.root();
  out.chunks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.chunks.push_back(BlockChunk{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(n), std::move(parts[i]),
                                    tree.proof(i)});
  }
  return out;
}

ChunkedBlock chunk_block(const Block& b, std::size_t chunk_size) { return chunk_bytes(encode_block(b), chunk_size); }

bool verify_chunk(const BlockChunk& c, const crypto::Digest& root) {
  return c.index < c.total && c.proof.index == c.index && crypto::merkle_verify(c.data, c.proof, root);
}

ChunkRejected::ChunkRejected(std::uint32_t index)
    : std::runtime_error("chunk " + std::to_string(index) + " failed its inclusion proof"), index_(index) {}

ChunkAssembler::ChunkAssembler(const crypto::Digest& root, std::uint32_t total) : root_(root), parts_(total) {
  if (total == 0) throw std::domain_error("chunk total must be positive");
}

ChunkAssembler::Result ChunkAssembler::add(const BlockChunk& c) {
  if (c.total != parts_.size() || !verify_chunk(c, root_)) return Result::rejected;
  auto& slot = parts_[c.index];
  if (slot) return Result::duplicate;
  slot = c.data;
  ++received_;
  return Result::accepted;
}

Bytes ChunkAssembler::bytes() const {
  if (!complete()) throw std::logic_error("chunk set incomplete");
  Bytes out;
  for (const auto& p : parts_) out.insert(out.end(), p->begin(), p->end());
  return out;
}

Block ChunkAssembler::assemble() const { return decode_block(bytes()); }

Block reassemble(std::span<const BlockChunk> chunks, const crypto::Digest& root) {
  if (chunks.empty()) throw std::domain_error("reassemble: no chunks");
  ChunkAssembler a(root, chunks.front().total);
  for (const auto& c : chunks) {
    if (a.add(c) == ChunkAssembler::Result::rejected) throw ChunkRejected(c.index);
  }
  if (!a.complete()) throw std::domain_error("reassemble: missing chunks");
  return a.assemble();
}

}  // namespace rescuesim::ledger
