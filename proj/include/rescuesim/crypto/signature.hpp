#pragma once

// Aggregatable signature contract modelled on BLS multi-signatures:
//   keygen / sign / verify, plus weighted aggregation
//   sigma = sum_i w_i * sigma_i,  w_i = H1(pk_i, {pk_1..pk_n}).
// The simulation backend keeps the bilinear algebra (so aggregation soundness
// and completeness hold exactly) but not the hardness assumptions.

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "rescuesim/crypto/hash.hpp"
#include "rescuesim/ledger/codec.hpp"

namespace rescuesim::crypto {

struct SecretKey {
  std::uint64_t scalar = 0;
};

struct PublicKey {
  std::uint64_t element = 0;
  friend bool operator==(const PublicKey&, const PublicKey&) = default;
  friend auto operator<=>(const PublicKey&, const PublicKey&) = default;
};

struct Signature {
  std::uint64_t element = 0;
  friend bool operator==(const Signature&, const Signature&) = default;
};

struct KeyPair {
  SecretKey sk;
  PublicKey pk;
  NodeId owner = 0;
  std::uint32_t index = 0;
};

struct AggregateSignature {
  Signature combined;
  std::vector<PublicKey> keys;
  std::vector<std::uint64_t> weights;
};

enum class Backend { simulation, pairing };

Backend parse_backend(std::string_view name);

class SignatureScheme {
 public:
  virtual ~SignatureScheme() = default;

  virtual KeyPair keygen(std::uint64_t seed, NodeId owner, std::uint32_t index = 0) const = 0;
  virtual Signature sign(std::span<const std::uint8_t> message, const SecretKey& sk) const = 0;
  virtual bool verify(const Signature& sig, std::span<const std::uint8_t> message, const PublicKey& pk) const = 0;

  /// H1(pk_i, {pk_1..pk_n}) reduced into the scalar field.
  virtual std::uint64_t aggregation_weight(const PublicKey& pk, std::span<const PublicKey> all) const = 0;

  /// Combines signatures that were all produced over `message`. Does not check
  /// the constituents; verify_aggregate fails if any of them is invalid.
  virtual AggregateSignature aggregate(std::span<const Signature> sigs, std::span<const PublicKey> keys) const = 0;
  virtual bool verify_aggregate(const AggregateSignature& agg, std::span<const std::uint8_t> message) const = 0;

  virtual std::size_t signature_size() const = 0;
  virtual std::size_t public_key_size() const = 0;

  virtual void encode(ledger::ByteWriter& w, const Signature& sig) const = 0;
  virtual void encode(ledger::ByteWriter& w, const PublicKey& pk) const = 0;
  /// Malformed encodings decode to an element that never verifies.
  virtual Signature decode_signature(ledger::ByteReader& r) const = 0;
  virtual PublicKey decode_public_key(ledger::ByteReader& r) const = 0;
};

/// Simulation backend over Z_q with q = 2^61 - 1 and pairing e(a, b) = a*b.
class SimulatedBls final : public SignatureScheme {
 public:
  static constexpr std::uint64_t kModulus = (1ULL << 61) - 1;
  /// Sentinel for malformed encodings; outside the field, so never verifies.
  static constexpr std::uint64_t kInvalid = UINT64_MAX;

  KeyPair keygen(std::uint64_t seed, NodeId owner, std::uint32_t index = 0) const override;
  Signature sign(std::span<const std::uint8_t> message, const SecretKey& sk) const override;
  bool verify(const Signature& sig, std::span<const std::uint8_t> message, const PublicKey& pk) const override;
  std::uint64_t aggregation_weight(const PublicKey& pk, std::span<const PublicKey> all) const override;
  AggregateSignature aggregate(std::span<const Signature> sigs, std::span<const PublicKey> keys) const override;
  bool verify_aggregate(const AggregateSignature& agg, std::span<const std::uint8_t> message) const override;

  std::size_t signature_size() const override { return 48; }
  std::size_t public_key_size() const override { return 96; }

  void encode(ledger::ByteWriter& w, const Signature& sig) const override;
  void encode(ledger::ByteWriter& w, const PublicKey& pk) const override;
  Signature decode_signature(ledger::ByteReader& r) const override;
  PublicKey decode_public_key(ledger::ByteReader& r) const override;

  /// Hash-to-group H0 for messages.
  static std::uint64_t hash_to_group(std::span<const std::uint8_t> message);
};

std::unique_ptr<SignatureScheme> make_signature_scheme(Backend backend);

/// Process-wide simulation scheme instance (stateless).
const SignatureScheme& default_scheme();

}  // namespace rescuesim::crypto
