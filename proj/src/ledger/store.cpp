#include "rescuesim/ledger/store.hpp"

#include <fstream>
#include <iterator>
#include <mutex>

namespace rescuesim::ledger {

crypto::Digest ContentStore::put(std::span<const std::uint8_t> data, std::string shard) {
  const auto ptr = crypto::h0(data);
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.try_emplace(ptr);
  if (inserted) {
    it->second.data.assign(data.begin(), data.end());
    it->second.shard = std::move(shard);
    total_bytes_ += data.size();
  }
  return ptr;
}

Bytes ContentStore::get(const crypto::Digest& pointer) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(pointer);
  if (it == entries_.end()) throw NotFound("no stored content for pointer " + crypto::to_hex(pointer));
  return it->second.data;
}

bool ContentStore::contains(const crypto::Digest& pointer) const {
  std::shared_lock lock(mutex_);
  return entries_.count(pointer) != 0;
}

std::string ContentStore::shard_of(const crypto::Digest& pointer) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(pointer);
  if (it == entries_.end()) throw NotFound("no stored content for pointer " + crypto::to_hex(pointer));
  return it->second.shard;
}

std::size_t ContentStore::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::size_t ContentStore::total_bytes() const {
  std::shared_lock lock(mutex_);
  return total_bytes_;
}

crypto::Digest ContentStore::certificate(const crypto::Digest& pointer) {
  return crypto::tagged_hash("rescuesim/store-cert", pointer);
}

void ContentStore::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::shared_lock lock(mutex_);
  std::ofstream index(dir / "shards.txt");
  for (const auto& [ptr, e] : entries_) {
    const auto name = crypto::to_hex(ptr);
    std::ofstream f(dir / name, std::ios::binary);
    f.write(reinterpret_cast<const char*>(e.data.data()), static_cast<std::streamsize>(e.data.size()));
    index << name << ' ' << e.shard << '\n';
  }
}

void ContentStore::load(const std::filesystem::path& dir) {
  std::map<std::string, std::string> shards;
  if (std::ifstream index(dir / "shards.txt"); index) {
    std::string name, shard;
    while (index >> name) {
      std::getline(index, shard);
      if (!shard.empty() && shard.front() == ' ') shard.erase(0, 1);
      shards[name] = shard;
    }
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() != 64) continue;
    std::ifstream f(entry.path(), std::ios::binary);
    Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const auto ptr = put(data, shards[name]);
    if (crypto::to_hex(ptr) != name) throw std::runtime_error("store file content does not match its name: " + name);
  }
}

}  // namespace rescuesim::ledger
