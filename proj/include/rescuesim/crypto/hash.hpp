#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "rescuesim/types.hpp"

namespace rescuesim::crypto {

using Digest = std::array<std::uint8_t, 32>;

/// Plain SHA-256.
Digest sha256(std::span<const std::uint8_t> data);

/// H0: arbitrary bytes -> digest, domain-separated from the other hash uses.
Digest h0(std::span<const std::uint8_t> data);

/// Hash with an explicit domain tag prefixed (length-prefixed, so tags never collide).
Digest tagged_hash(std::string_view tag, std::span<const std::uint8_t> data);

/// First 8 bytes of a digest as a little-endian integer.
std::uint64_t digest_prefix_u64(const Digest& d);

std::string to_hex(std::span<const std::uint8_t> data);
Digest digest_from_hex(std::string_view hex);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// The all-zero digest. Consensus uses it as the distinguished nil value.
constexpr Digest kZeroDigest{};

}  // namespace rescuesim::crypto
