#pragma once

// Content-addressed off-chain store. Single writer, many readers.

#include <filesystem>
#include <map>
#include <shared_mutex>
#include <stdexcept>
#include <string>

#include "rescuesim/crypto/hash.hpp"

namespace rescuesim::ledger {

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ContentStore {
 public:
  /// pointer = H0(data). Idempotent; the shard label of the first put is kept.
  crypto::Digest put(std::span<const std::uint8_t> data, std::string shard = {});
  Bytes get(const crypto::Digest& pointer) const;
  bool contains(const crypto::Digest& pointer) const;
  std::string shard_of(const crypto::Digest& pointer) const;
  std::size_t size() const;
  std::size_t total_bytes() const;

  /// Storage receipt bound to the pointer.
  static crypto::Digest certificate(const crypto::Digest& pointer);

  /// One file per entry named by the hex pointer; shards in an index file.
  void save(const std::filesystem::path& dir) const;
  /// Merges entries saved by save(); verifies each file against its name.
  void load(const std::filesystem::path& dir);

 private:
  struct Entry {
    Bytes data;
    std::string shard;
  };
  mutable std::shared_mutex mutex_;
  std::map<crypto::Digest, Entry> entries_;
  std::size_t total_bytes_ = 0;
};

}  // namespace rescuesim::ledger
